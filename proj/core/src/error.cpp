#include "rulf/error.hpp"

namespace rulf {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MalformedTimestamp: return "MalformedTimestamp";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NotEnoughLogs: return "NotEnoughLogs";
    case ErrorCode::HorizonTooLong: return "HorizonTooLong";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::NoTrainingData: return "NoTrainingData";
    case ErrorCode::TargetNotFound: return "TargetNotFound";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace rulf
