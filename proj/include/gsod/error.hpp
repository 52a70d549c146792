// Copyright 2026 The gsod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gsod {

/// Base class of every error raised by the library. The CLI maps any
/// `gsod::Error` to exit code 1 (domain error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidBoxError : public Error {
public:
    using Error::Error;
};

class DegenerateGaussianError : public Error {
public:
    using Error::Error;
};

class DegenerateAnnotationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : ParseError(what, 0) {}
    /// "source:line: what".
    ParseError(const std::string& what, std::size_t line, const std::string& source)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    /// 1-based line number, 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConsistencyError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class PlacementError : public Error {
public:
    using Error::Error;
};

}  // namespace gsod
