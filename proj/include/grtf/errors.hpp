#pragma once
#include <stdexcept>
#include <string>

namespace grtf {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Remote embedding / reranker transport failure. status < 0 means no HTTP
// response was received at all.
struct TransportError : std::runtime_error {
    int status;
    int retry_after_seconds;  // -1 when the server gave no hint
    TransportError(const std::string& msg, int status_ = -1, int retry_after = -1)
        : std::runtime_error(msg), status(status_), retry_after_seconds(retry_after) {}
};

struct CacheMissError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace grtf
