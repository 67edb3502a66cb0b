#pragma once

#include <stdexcept>
#include <string>

namespace rovella {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// point outside the domain of an operation (x = 0 without side, ...)
struct DomainError : Error {
    using Error::Error;
};

struct ParameterRangeError : Error {
    using Error::Error;
};

// a constant violates one of the induction inequalities
struct ConstraintError : Error {
    ConstraintError(std::string name, const std::string& what)
        : Error(what), inequality(std::move(name)) {}
    std::string inequality;
};

struct NotFound : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace rovella
