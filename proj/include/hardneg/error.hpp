#pragma once

#include <stdexcept>
#include <string>

namespace hardneg {

/// Base class for every error raised by this toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / stream failures (open, read, write).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace hardneg
