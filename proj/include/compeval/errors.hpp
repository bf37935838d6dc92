#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace compeval {

enum class ErrorCode {
  FileNotFound,
  IoError,
  MalformedRecord,
  MissingField,
  UnknownSubset,
  UnknownBenchmark,
  InvariantViolation,
  ImageUnresolvable,
  DuplicateId,
  EmptySequence,
  DimensionMismatch,
  ZeroNorm,
  EmptyRows,
  EmptyDemos,
  NotEnoughDemos,
  InvalidShotCount,
  ServiceError,
  RetryableQuality,
  DegenerateNegative,
  ImageDecodeError,
  WrongKind,
  CapabilityError,
  ScoresUnavailable,
  InvalidConfig,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnknownSubset: return "UnknownSubset";
    case ErrorCode::UnknownBenchmark: return "UnknownBenchmark";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ImageUnresolvable: return "ImageUnresolvable";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::EmptyRows: return "EmptyRows";
    case ErrorCode::EmptyDemos: return "EmptyDemos";
    case ErrorCode::NotEnoughDemos: return "NotEnoughDemos";
    case ErrorCode::InvalidShotCount: return "InvalidShotCount";
    case ErrorCode::ServiceError: return "ServiceError";
    case ErrorCode::RetryableQuality: return "RetryableQuality";
    case ErrorCode::DegenerateNegative: return "DegenerateNegative";
    case ErrorCode::ImageDecodeError: return "ImageDecodeError";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::CapabilityError: return "CapabilityError";
    case ErrorCode::ScoresUnavailable: return "ScoresUnavailable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Carrier for every failure the harness can raise. The optional fields hold
/// whatever context the failing operation had: manifest line numbers, field
/// names, item ids, demo indices, HTTP statuses.
class EvalError : public std::runtime_error {
 public:
  EvalError(ErrorCode code, std::string message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  EvalError& with_line(std::size_t line_no) {
    line_no_ = line_no;
    return *this;
  }
  EvalError& with_field(std::string field) {
    field_ = std::move(field);
    return *this;
  }
  EvalError& with_item(std::string item_id) {
    item_id_ = std::move(item_id);
    return *this;
  }
  EvalError& with_index(std::size_t index) {
    index_ = index;
    return *this;
  }
  EvalError& with_status(int http_status) {
    http_status_ = http_status;
    return *this;
  }

  const std::optional<std::size_t>& line_no() const noexcept { return line_no_; }
  const std::optional<std::string>& field() const noexcept { return field_; }
  const std::optional<std::string>& item_id() const noexcept { return item_id_; }
  const std::optional<std::size_t>& index() const noexcept { return index_; }
  const std::optional<int>& http_status() const noexcept { return http_status_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_no_;
  std::optional<std::string> field_;
  std::optional<std::string> item_id_;
  std::optional<std::size_t> index_;
  std::optional<int> http_status_;
};

}  // namespace compeval
