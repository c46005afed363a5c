#include "gaze2seg/error.hpp"

namespace g2s {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kOk: return "Ok";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kIo: return "Io";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kBadHeader: return "BadHeader";
    case Errc::kSizeMismatch: return "SizeMismatch";
    case Errc::kUnsupportedDtype: return "UnsupportedDtype";
    case Errc::kInvalidDims: return "InvalidDims";
    case Errc::kInvalidSpacing: return "InvalidSpacing";
    case Errc::kInvalidMaskValue: return "InvalidMaskValue";
    case Errc::kUnsupportedCompressed: return "UnsupportedCompressed";
    case Errc::kUnsupportedDatatype: return "UnsupportedDatatype";
    case Errc::kUnsupportedDims: return "UnsupportedDims";
    case Errc::kMissingViewport: return "MissingViewport";
    case Errc::kNonMonotonicTime: return "NonMonotonicTime";
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kSliceOutOfRange: return "SliceOutOfRange";
    case Errc::kEmptyMask: return "EmptyMask";
    case Errc::kEmptyHeatmap: return "EmptyHeatmap";
    case Errc::kAllSameClass: return "AllSameClass";
    case Errc::kDimMismatch: return "DimMismatch";
    case Errc::kBackendUnavailable: return "BackendUnavailable";
    case Errc::kBackendProtocolError: return "BackendProtocolError";
    case Errc::kMissingGroundTruth: return "MissingGroundTruth";
    case Errc::kInvalidSpec: return "InvalidSpec";
    case Errc::kNoPrompts: return "NoPrompts";
    case Errc::kNotFound: return "NotFound";
    case Errc::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace g2s
