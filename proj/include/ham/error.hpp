#pragma once

#include <stdexcept>
#include <string>

namespace ham {

// Error kinds map onto the CLI exit-code contract:
//   argument/validation/parse -> 1, io -> 2, numeric -> 3.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error("argument", msg) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error("validation", msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

}  // namespace ham
