#include "adiabat/errors.hpp"

namespace adiabat {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::UnsupportedFamily: return "unsupported family";
        case ErrorKind::DegenerateTemperature: return "degenerate temperature";
        case ErrorKind::SingularVelocity: return "singular velocity";
        case ErrorKind::DomainExit: return "domain exit";
        case ErrorKind::Extrapolation: return "extrapolation";
        case ErrorKind::Resolution: return "resolution";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Range: return "range";
    }
    return "error";
}

std::string_view to_string(ConfigErrorCode code) {
    switch (code) {
        case ConfigErrorCode::Syntax: return "E_SYNTAX";
        case ConfigErrorCode::UnknownExperiment: return "E_UNKNOWN_EXPERIMENT";
        case ConfigErrorCode::UnknownFamily: return "E_UNKNOWN_FAMILY";
        case ConfigErrorCode::MissingKey: return "E_MISSING_KEY";
        case ConfigErrorCode::BadValue: return "E_BAD_VALUE";
        case ConfigErrorCode::ConstraintViolation: return "E_CONSTRAINT";
    }
    return "E_CONFIG";
}

}  // namespace adiabat
