#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace regen {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

// Unknown or malformed key in a config file; carries the offending key.
struct ConfigError : Error {
    std::string key;
    ConfigError(std::string k, const std::string& msg)
        : Error(msg), key(std::move(k)) {}
};

// Clip length is not a multiple of the chunk length; carries the minimal
// valid padded length.
struct ChunkError : Error {
    int64_t pad_to;
    ChunkError(const std::string& msg, int64_t pad) : Error(msg), pad_to(pad) {}
};

struct CheckpointError : Error {
    using Error::Error;
};

struct KMismatchError : Error {
    using Error::Error;
};

struct TokenBudgetError : Error {
    using Error::Error;
};

struct NonFiniteLossError : Error {
    using Error::Error;
};

struct ShiftError : Error {
    using Error::Error;
};

}  // namespace regen
