#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genrank {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (TREC runs, qrels, queries TSV, corpus files, config).
struct ParseError : Error {
    explicit ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_number(line) {}
    std::size_t line_number;
};

// Invalid configuration or precondition caught before any work is done.
struct ConfigError : Error {
    using Error::Error;
};

// Endpoint/transport failures. `http_status` is 0 for transport-level
// failures (connect/read timeout) and for exhausted retries without a
// final status.
struct BackendError : Error {
    explicit BackendError(const std::string& msg, int status = 0)
        : Error(msg), http_status(status) {}
    int http_status;
};

// A model response that could not be interpreted at all. Rerankers catch
// this and apply their documented fallback instead of aborting.
struct UnparseableResponseError : Error {
    using Error::Error;
};

}  // namespace genrank
