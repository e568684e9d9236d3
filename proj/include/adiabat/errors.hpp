#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adiabat {

/// Failure categories raised by the numerical modules.
enum class ErrorKind {
    Domain,               // argument outside the operation's domain
    UnsupportedFamily,    // family has no representation for the request
    DegenerateTemperature,
    SingularVelocity,     // G(eps, a) = 0 where a velocity is requested
    DomainExit,           // characteristic left the DOS support
    Extrapolation,        // characteristic foot outside the initial grid
    Resolution,           // crossing scan budget exhausted
    Divergence,           // partition integral does not converge
    Range,                // root bracket not found
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by DomainExit; carries the parameter value at which the path left the support.
class DomainExitError : public Error {
public:
    DomainExitError(double a_exit, const std::string& what)
        : Error(ErrorKind::DomainExit, what), a_exit_(a_exit) {}

    double a_exit() const noexcept { return a_exit_; }

private:
    double a_exit_;
};

/// Scenario configuration failures. Each code maps to a distinct CLI diagnostic.
enum class ConfigErrorCode {
    Syntax,
    UnknownExperiment,
    UnknownFamily,
    MissingKey,
    BadValue,
    ConstraintViolation,
};

std::string_view to_string(ConfigErrorCode code);

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigErrorCode code, std::string key, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + " [" + key + "]: " + what),
          code_(code), key_(std::move(key)) {}

    ConfigErrorCode code() const noexcept { return code_; }
    const std::string& key() const noexcept { return key_; }

private:
    ConfigErrorCode code_;
    std::string key_;
};

}  // namespace adiabat
