#pragma once

#include <stdexcept>
#include <string>

namespace levydiv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class RejectDriftlessCompoundPoisson : public InvalidModel {
public:
    RejectDriftlessCompoundPoisson()
        : InvalidModel("model is a driftless compound Poisson process") {}
};

class RejectInfiniteMeanJumps : public InvalidModel {
public:
    explicit RejectInfiniteMeanJumps(const std::string& what) : InvalidModel(what) {}
};

class NonIntegrableSmallJumps : public InvalidModel {
public:
    explicit NonIntegrableSmallJumps(const std::string& what) : InvalidModel(what) {}
};

class EmptySample : public Error {
public:
    EmptySample() : Error("sample size must be positive") {}
};

// Numerical failures; the CLI maps these to exit status 3.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class AmbiguousBracket : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class GridTooCoarse : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, std::string message, long line = -1)
        : Error(format(field, message, line)), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    long line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, const std::string& message, long line) {
        std::string s = "config";
        if (line >= 0) s += " line " + std::to_string(line);
        if (!field.empty()) s += " [" + field + "]";
        return s + ": " + message;
    }

    std::string field_;
    long line_;
};

}  // namespace levydiv
