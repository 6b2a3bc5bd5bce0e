#pragma once

#include <stdexcept>
#include <string>

namespace blockflow {

enum class ErrorCode {
  MalformedXml,
  UnknownKind,
  DanglingEdge,
  PortConflict,
  CycleDetected,
  MissingInput,
  InfeasibleSpec,
  TooManyWorkers,
  DeadlockedPlan,
  PatternMismatch,
  BindingMissing,
  BusClosed,
  OracleMismatch,
  EmptyInput,
  IoError,
  UsageError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blockflow
