#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bronchograph/error.hpp"

namespace bronchograph {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);
Vec3 cross(const Vec3& a, const Vec3& b);

/// Grid extents, x-fastest linearization.
struct Dims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * z);
  }
  std::size_t index(const Index3& p) const { return index(p[0], p[1], p[2]); }
  Index3 coords(std::size_t i) const {
    const auto plane = static_cast<std::size_t>(nx) * ny;
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / plane)};
  }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
  int extent(int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }

  friend bool operator==(const Dims&, const Dims&) = default;
};

enum class VolumeKind { Binary, Labels };

/// Voxel grid with physical spacing (mm/voxel). Binary masks hold {0,1}; label
/// volumes hold nonnegative 16-bit ids.
class Volume {
 public:
  Volume() = default;
  Volume(Dims dims, Vec3 spacing, VolumeKind kind);
  Volume(Dims dims, Vec3 spacing, VolumeKind kind, std::vector<std::uint16_t> data);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  VolumeKind kind() const { return kind_; }
  std::size_t size() const { return data_.size(); }

  std::uint16_t operator[](std::size_t i) const { return data_[i]; }
  std::uint16_t& operator[](std::size_t i) { return data_[i]; }
  std::uint16_t at(int x, int y, int z) const { return data_[dims_.index(x, y, z)]; }
  void set(int x, int y, int z, std::uint16_t v) { data_[dims_.index(x, y, z)] = v; }

  const std::vector<std::uint16_t>& data() const { return data_; }
  std::vector<std::uint16_t>& data() { return data_; }

  void set_spacing(const Vec3& s);

  /// Physical position (mm) of a voxel center; origin at voxel (0,0,0).
  Vec3 position(std::size_t i) const;
  Vec3 position(const Index3& p) const;

  std::size_t foreground_count() const;
  /// Throws InvalidArgument if the kind invariants do not hold.
  void validate() const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_;
  Vec3 spacing_{1.0, 1.0, 1.0};
  VolumeKind kind_ = VolumeKind::Binary;
  std::vector<std::uint16_t> data_;
};

/// Real-valued field on a voxel grid (distance transforms, probability maps).
struct ScalarField {
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  std::vector<double> data;

  double operator[](std::size_t i) const { return data[i]; }
  double& operator[](std::size_t i) { return data[i]; }
};

using DistanceField = ScalarField;

void check_spacing(const Vec3& s);
void require_same_dims(const Dims& a, const Dims& b, const char* what);

/// 26-neighborhood offsets, in lexicographic (dz, dy, dx) order.
const std::array<Index3, 26>& neighbor_offsets26();

}  // namespace bronchograph
