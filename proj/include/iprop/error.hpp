#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace iprop {

enum class ErrorCode {
  // dataset
  MissingField,
  EmptyDataset,
  MalformedContent,
  SingleLabelDataset,
  StratificationImpossible,
  SizeTooLarge,
  // configuration / session setup
  InvalidConfig,
  LabelInconsistency,
  // llm client
  ProviderUnreachable,
  AuthFailure,
  ResponseEmpty,
  Timeout,
  BadResponse,
  // prompt ops
  ParaphraseEmpty,
  // metrics
  IdMismatch,
  EmptyEvaluation,
  // optimizer
  IterationFailed,
  InvalidChoice,
  InvalidState,
  // service
  NotFound,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code plus optional structured details
/// (missing labels, offending record index, HTTP status, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  /// True for failures of the LLM provider (as opposed to user/config errors).
  bool is_provider_failure() const noexcept {
    switch (code_) {
      case ErrorCode::ProviderUnreachable:
      case ErrorCode::AuthFailure:
      case ErrorCode::ResponseEmpty:
      case ErrorCode::Timeout:
      case ErrorCode::BadResponse:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace iprop
