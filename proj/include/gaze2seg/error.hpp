#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace g2s {

// Numeric values are part of the C ABI (see gaze2seg.h) and must not change.
enum class Errc : int {
  kOk = 0,
  kInvalidArgument = 1,
  kIo = 2,
  kBadMagic = 3,
  kBadHeader = 4,
  kSizeMismatch = 5,
  kUnsupportedDtype = 6,
  kInvalidDims = 7,
  kInvalidSpacing = 8,
  kInvalidMaskValue = 9,
  kUnsupportedCompressed = 10,
  kUnsupportedDatatype = 11,
  kUnsupportedDims = 12,
  kMissingViewport = 13,
  kNonMonotonicTime = 14,
  kMalformedLine = 15,
  kSliceOutOfRange = 16,
  kEmptyMask = 17,
  kEmptyHeatmap = 18,
  kAllSameClass = 19,
  kDimMismatch = 20,
  kBackendUnavailable = 21,
  kBackendProtocolError = 22,
  kMissingGroundTruth = 23,
  kInvalidSpec = 24,
  kNoPrompts = 25,
  kNotFound = 26,
  kInternal = 99,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Error carrying the 1-based line number of a text input.
class LineError : public Error {
 public:
  LineError(Errc code, int line, const std::string& what)
      : Error(code, what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace g2s
