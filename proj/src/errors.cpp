#include "isingdyn/errors.hpp"

namespace isingdyn {

const char* error_kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Indeterminate: return "Indeterminate";
    case ErrorKind::CoverViolated: return "CoverViolated";
    case ErrorKind::HypothesisFailed: return "HypothesisFailed";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::DegreeViolation: return "DegreeViolation";
    case ErrorKind::SeedUnavailable: return "SeedUnavailable";
    case ErrorKind::CertificationFailed: return "CertificationFailed";
    case ErrorKind::InconsistentOracle: return "InconsistentOracle";
    case ErrorKind::SeparationFailure: return "SeparationFailure";
    case ErrorKind::NoPerfectMatching: return "NoPerfectMatching";
    }
    return "Error";
}

}  // namespace isingdyn
