#pragma once

#include <stdexcept>
#include <string>

namespace lnn {

//! Invalid argument or configuration (CLI exit code 1).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

//! Malformed or unusable input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! A numerical procedure could not produce a usable result (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw ArgumentError(msg);
}

} // namespace detail

} // namespace lnn
