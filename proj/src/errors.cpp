#include "locport/errors.hpp"

namespace locport {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::WrongReturnKind: return "WrongReturnKind";
    case ErrorCode::BadProbabilities: return "BadProbabilities";
    case ErrorCode::BadBlockSpec: return "BadBlockSpec";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::TooManyBinaries: return "TooManyBinaries";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InfeasibleAtMu0: return "InfeasibleAtMu0";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::FractionalSolution: return "FractionalSolution";
    case ErrorCode::BadBeta: return "BadBeta";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SolverFailure: return "SolverFailure";
    }
    return "Unknown";
}

} // namespace locport
