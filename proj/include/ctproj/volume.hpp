#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctproj {

inline constexpr int kMinHu = -2048;
inline constexpr int kMaxHu = 3071;

/// Round half away from zero. The only rounding rule used when HU integers are produced.
inline long round_half_away(double v) noexcept { return std::lround(v); }

inline int clamp_hu(long v) noexcept {
  return static_cast<int>(v < kMinHu ? kMinHu : (v > kMaxHu ? kMaxHu : v));
}

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  bool positive() const noexcept { return nx > 0 && ny > 0 && nz > 0; }
  int operator[](int axis) const noexcept { return axis == 0 ? nx : (axis == 1 ? ny : nz); }

  /// x-fastest linear index.
  std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
  }

  friend bool operator==(const Dims&, const Dims&) = default;
};

struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  double operator[](int axis) const noexcept { return axis == 0 ? sx : (axis == 1 ? sy : sz); }
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// X and Y projections are sagittal and coronal; Z is axial.
enum class Axis { X = 0, Y = 1, Z = 2 };

std::string_view axis_name(Axis a) noexcept;
Axis parse_axis(std::string_view s);

/// Orientation tag: +x toward patient-left, +y posterior, +z superior.
inline constexpr std::string_view kDefaultOrientation = "LPS";

/// Immutable grid of Hounsfield-unit samples, x-fastest.
class HuVolume {
 public:
  HuVolume(Dims dims, Spacing spacing, std::vector<std::int16_t> data,
           std::string orientation = std::string(kDefaultOrientation));

  /// Volume filled with one value.
  static HuVolume filled(Dims dims, Spacing spacing, int hu,
                         std::string orientation = std::string(kDefaultOrientation));

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  const std::string& orientation() const noexcept { return orientation_; }
  std::span<const std::int16_t> data() const noexcept { return data_; }

  int at(int x, int y, int z) const noexcept { return data_[dims_.index(x, y, z)]; }
  int operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Copy of the axial slice z, row-major (x fastest).
  std::vector<std::int16_t> axial_slice(int z) const;

  friend bool operator==(const HuVolume&, const HuVolume&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
  std::string orientation_;
  std::vector<std::int16_t> data_;
};

/// Trilinear sample at continuous voxel coordinates; coordinates are clamped to the grid.
double sample_trilinear(const HuVolume& v, double x, double y, double z) noexcept;

/// Rescale to target_dims. Voxel centres map proportionally through the extent
/// (src = (dst + 0.5) * n_in / n_out - 0.5, clamped), spacing scales so the
/// physical extent is preserved.
HuVolume resample(const HuVolume& v, Dims target_dims);

/// Mean of each 2x2x2 block, rounded half away from zero; spacing doubles.
HuVolume downsample2(const HuVolume& v);

inline constexpr double kMaxRotationDeg = 45.0;

/// Rotation about the volume centre in physical coordinates, applied X then Y
/// then Z (R = Rz * Ry * Rx). Output voxels whose source falls outside the grid
/// take fill_hu. All-zero angles return the input unchanged.
HuVolume rotate3d(const HuVolume& v, std::array<double, 3> angles_deg, int fill_hu);

}  // namespace ctproj
