#include "blockflow/errors.hpp"

namespace blockflow {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::PortConflict: return "PortConflict";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::TooManyWorkers: return "TooManyWorkers";
    case ErrorCode::DeadlockedPlan: return "DeadlockedPlan";
    case ErrorCode::PatternMismatch: return "PatternMismatch";
    case ErrorCode::BindingMissing: return "BindingMissing";
    case ErrorCode::BusClosed: return "BusClosed";
    case ErrorCode::OracleMismatch: return "OracleMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Error";
}

}  // namespace blockflow
