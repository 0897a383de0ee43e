// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthtag {

enum class ErrorCode {
  // features
  UnreadableFile,
  UnsupportedFormat,
  ClipTooShort,
  // dataset
  MissingFile,
  UnknownGenre,
  EmptyManifest,
  MissingClassInPool,
  // model
  InvalidConfig,
  ShapeMismatch,
  CorruptCheckpoint,
  ConfigMismatch,
  // losses
  InvalidLabel,
  InvalidGamma,
  // trainer
  RegimeConfigError,
  // promptgen
  EmptyDescription,
  ClientError,
  QuotaExceeded,
  AdapterUnavailable,
  GenerationFailed,
  // evalviz
  EmptySplit,
  TooFewFolds,
  TooFewPoints,
  EmptyPlot,
  // cli / generic
  UsageError,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. Callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace synthtag
