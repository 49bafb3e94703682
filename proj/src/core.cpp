#include "topview/core.hpp"

#include <algorithm>
#include <cmath>

namespace topview {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::VanishingPointBelowScene: return "VanishingPointBelowScene";
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::InsufficientSegments: return "InsufficientSegments";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AboveHorizon: return "AboveHorizon";
    case ErrorCode::MissingGeoAnchor: return "MissingGeoAnchor";
    case ErrorCode::MixedCalibration: return "MixedCalibration";
    case ErrorCode::UnknownCamera: return "UnknownCamera";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::DirectionAtInfinity: return "DirectionAtInfinity";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double BBox::diagonal() const { return std::hypot(width(), height()); }

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.width() * a.height() + b.width() * b.height() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace topview
