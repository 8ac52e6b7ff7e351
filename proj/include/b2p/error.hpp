#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace b2p {

enum class ErrorCode {
  ConfigInvalid,
  IndexOutOfRange,
  DuplicateResponse,
  IllegalTransition,
  InvalidBand,
  UnstableDesign,
  ShapeMismatch,
  SegmentTooLong,
  BandOutOfRange,
  NotCalibrated,
  InvalidScript,
  MalformedFile,
  MissingMetadata,
  ConfigLocked,
  AlreadyRunning,
  NotRunning,
  UnknownSession,
  BadMessage,
  RoleViolation,
  LogCorrupt,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return "config_invalid";
    case ErrorCode::IndexOutOfRange: return "index_out_of_range";
    case ErrorCode::DuplicateResponse: return "duplicate_response";
    case ErrorCode::IllegalTransition: return "illegal_transition";
    case ErrorCode::InvalidBand: return "invalid_band";
    case ErrorCode::UnstableDesign: return "unstable_design";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::SegmentTooLong: return "segment_too_long";
    case ErrorCode::BandOutOfRange: return "band_out_of_range";
    case ErrorCode::NotCalibrated: return "not_calibrated";
    case ErrorCode::InvalidScript: return "invalid_script";
    case ErrorCode::MalformedFile: return "malformed_file";
    case ErrorCode::MissingMetadata: return "missing_metadata";
    case ErrorCode::ConfigLocked: return "config_locked";
    case ErrorCode::AlreadyRunning: return "already_running";
    case ErrorCode::NotRunning: return "not_running";
    case ErrorCode::UnknownSession: return "unknown_session";
    case ErrorCode::BadMessage: return "bad_message";
    case ErrorCode::RoleViolation: return "role_violation";
    case ErrorCode::LogCorrupt: return "log_corrupt";
  }
  return "unknown";
}

// Every recoverable failure in the library is reported as an Error carrying a
// machine-readable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace b2p
