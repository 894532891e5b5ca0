#pragma once

#include <stdexcept>
#include <string>

namespace adsorbkit {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UnknownElementError : public Error {
public:
    explicit UnknownElementError(const std::string& symbol)
        : Error("unknown element: " + symbol), symbol_(symbol) {}
    const std::string& symbol() const { return symbol_; }

private:
    std::string symbol_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class NonPositiveCellError : public Error {
public:
    explicit NonPositiveCellError(const std::string& what) : Error(what) {}
};

class CellTooSmallError : public Error {
public:
    explicit CellTooSmallError(const std::string& what) : Error(what) {}
};

class NoAdsorbateError : public Error {
public:
    NoAdsorbateError() : Error("structure has no adsorbate site") {}
};

class AmbiguousAdsorbateError : public Error {
public:
    explicit AmbiguousAdsorbateError(const std::string& what) : Error(what) {}
};

class IndexOutOfRangeError : public Error {
public:
    explicit IndexOutOfRangeError(const std::string& what) : Error(what) {}
};

class ShapeMismatchError : public Error {
public:
    explicit ShapeMismatchError(const std::string& what) : Error(what) {}
};

class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& what) : Error(what) {}
};

class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& what) : Error(what) {}
};

class ConstantTargetsError : public Error {
public:
    ConstantTargetsError() : Error("targets are constant; r2 undefined") {}
};

class ZeroNormRowError : public Error {
public:
    explicit ZeroNormRowError(std::size_t row)
        : Error("zero-norm embedding row " + std::to_string(row)) {}
};

class NonFiniteLossError : public Error {
public:
    explicit NonFiniteLossError(const std::string& what) : Error(what) {}
};

class UnrealizableMetaError : public Error {
public:
    explicit UnrealizableMetaError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

class CheckpointMismatchError : public Error {
public:
    explicit CheckpointMismatchError(const std::string& what) : Error(what) {}
};

}  // namespace adsorbkit
