#include "bronchograph/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bronchograph {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::RootNotForeground: return "RootNotForeground";
    case ErrorCode::ZeroLengthBranch: return "ZeroLengthBranch";
    case ErrorCode::UnknownLabelId: return "UnknownLabelId";
    case ErrorCode::GraphMismatch: return "GraphMismatch";
    case ErrorCode::ProbOutOfRange: return "ProbOutOfRange";
    case ErrorCode::DegenerateApex: return "DegenerateApex";
    case ErrorCode::TooFewCases: return "TooFewCases";
    case ErrorCode::ZeroVarianceBoth: return "ZeroVarianceBoth";
    case ErrorCode::SpecOverlap: return "SpecOverlap";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

void check_spacing(const Vec3& s) {
  for (double v : s) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "spacing components must be finite and > 0");
    }
  }
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream os;
    os << what << ": " << a.nx << "x" << a.ny << "x" << a.nz << " vs " << b.nx << "x" << b.ny << "x" << b.nz;
    throw Error(ErrorCode::DimsMismatch, os.str());
  }
}

Volume::Volume(Dims dims, Vec3 spacing, VolumeKind kind)
    : Volume(dims, spacing, kind, std::vector<std::uint16_t>(dims.count(), 0)) {}

Volume::Volume(Dims dims, Vec3 spacing, VolumeKind kind, std::vector<std::uint16_t> data)
    : dims_(dims), spacing_(spacing), kind_(kind), data_(std::move(data)) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw Error(ErrorCode::InvalidArgument, "dims must be positive");
  }
  check_spacing(spacing);
  if (data_.size() != dims.count()) {
    throw Error(ErrorCode::DimsMismatch, "data length does not match dims");
  }
}

void Volume::set_spacing(const Vec3& s) {
  check_spacing(s);
  spacing_ = s;
}

Vec3 Volume::position(std::size_t i) const { return position(dims_.coords(i)); }

Vec3 Volume::position(const Index3& p) const {
  return {p[0] * spacing_[0], p[1] * spacing_[1], p[2] * spacing_[2]};
}

std::size_t Volume::foreground_count() const {
  return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](auto v) { return v != 0; }));
}

void Volume::validate() const {
  if (kind_ == VolumeKind::Binary &&
      std::any_of(data_.begin(), data_.end(), [](auto v) { return v > 1; })) {
    throw Error(ErrorCode::InvalidArgument, "binary volume holds values other than 0/1");
  }
}

const std::array<Index3, 26>& neighbor_offsets26() {
  static const std::array<Index3, 26> offsets = [] {
    std::array<Index3, 26> out{};
    int k = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (dx || dy || dz) out[k++] = {dx, dy, dz};
    return out;
  }();
  return offsets;
}

}  // namespace bronchograph
