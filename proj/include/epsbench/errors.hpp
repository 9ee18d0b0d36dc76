#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace epsbench {

// Base for every error the library raises on a violated precondition or
// malformed input. Analysis failures that are merely *reported* (see
// validate()) never throw.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotIrreducible : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CapExceeded : public Error {
public:
    using Error::Error;
};

class UnsupportedAlphabet : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class DegenerateSpec : public Error {
public:
    using Error::Error;
};

class NonFiniteFeature : public Error {
public:
    using Error::Error;
};

class DivergenceDetected : public Error {
public:
    using Error::Error;
};

class EmptyRange : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

}  // namespace epsbench
