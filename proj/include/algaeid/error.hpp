#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace algaeid {

enum class ErrorCode {
  InvalidArgument,
  FileNotFound,
  UnsupportedFormat,
  CorruptHeader,
  MalformedRow,
  BadLabel,
  IoFailure,
  ImageSmallerThanTile,
  AllSameIntensity,
  DegenerateSpectrum,
  ContourCollapsed,
  EmptyMask,
  PatchTooSmall,
  NoValidPairs,
  TooFewSamples,
  DegenerateData,
  SingleClassInput,
  NonFiniteFeature,
  DimensionMismatch,
  LengthMismatch,
  ClassTooSmall,
  ConfigOutOfRange,
  TooFewPatches,
  BadModelFile,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the feature assembler; carries the descriptor block that failed.
class FeatureError : public Error {
 public:
  FeatureError(std::string block, const Error& cause)
      : Error(cause.code(), block + ": " + cause.what()), block_(std::move(block)) {}

  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ImageSmallerThanTile: return "ImageSmallerThanTile";
    case ErrorCode::AllSameIntensity: return "AllSameIntensity";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::ContourCollapsed: return "ContourCollapsed";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::PatchTooSmall: return "PatchTooSmall";
    case ErrorCode::NoValidPairs: return "NoValidPairs";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::ConfigOutOfRange: return "ConfigOutOfRange";
    case ErrorCode::TooFewPatches: return "TooFewPatches";
    case ErrorCode::BadModelFile: return "BadModelFile";
  }
  return "Unknown";
}

}  // namespace algaeid
