// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/error.hpp"

namespace synthtag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ClipTooShort: return "ClipTooShort";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnknownGenre: return "UnknownGenre";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::MissingClassInPool: return "MissingClassInPool";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::InvalidGamma: return "InvalidGamma";
    case ErrorCode::RegimeConfigError: return "RegimeConfigError";
    case ErrorCode::EmptyDescription: return "EmptyDescription";
    case ErrorCode::ClientError: return "ClientError";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::AdapterUnavailable: return "AdapterUnavailable";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::TooFewFolds: return "TooFewFolds";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyPlot: return "EmptyPlot";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace synthtag
