#pragma once

#include <stdexcept>
#include <string>

namespace veingrow {

enum class ErrorCode {
  DegenerateGeometry,
  OriginOutsideMask,
  InternalGeometryError,
  OutOfBounds,
  NodeSearchEscaped,
  DegenerateTarget,
  NumericalDomain,
  ShapeError,
  ParseError,
  EmptyCorpus,
  ParamError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::OriginOutsideMask: return "OriginOutsideMask";
    case ErrorCode::InternalGeometryError: return "InternalGeometryError";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NodeSearchEscaped: return "NodeSearchEscaped";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::NumericalDomain: return "NumericalDomain";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ParamError: return "ParamError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace veingrow
