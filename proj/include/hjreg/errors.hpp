#pragma once

#include <stdexcept>
#include <string>

namespace hjreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad construction parameters (m <= 1, singular coercive matrix, ...).
class InvalidModel : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a structure function (F, eta, psi).
class OutOfDomain : public Error {
public:
    using Error::Error;
};

/// Integrand evaluation failed, e.g. phi <= 0 in the interior.
class DomainError : public Error {
public:
    using Error::Error;
};

/// No constructive tail bound for the integral defining F.
class NonIntegrable : public Error {
public:
    using Error::Error;
};

class CflViolation : public Error {
public:
    using Error::Error;
};

class NonFinite : public Error {
public:
    using Error::Error;
};

/// Field values that cannot be mapped by the exponential transform.
class NormalizationError : public Error {
public:
    using Error::Error;
};

/// A check was invoked in a configuration it does not apply to.
class Misuse : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hjreg
