#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ctproj/volume.hpp"

namespace ctproj {

/// Per-voxel lung mask aligned to a HuVolume. One byte per voxel, values 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Dims dims);
  BinaryMask(Dims dims, std::vector<std::uint8_t> bits);

  const Dims& dims() const noexcept { return dims_; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  bool at(int x, int y, int z) const noexcept { return bits_[dims_.index(x, y, z)] != 0; }
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(int x, int y, int z, bool on = true) noexcept { bits_[dims_.index(x, y, z)] = on ? 1 : 0; }
  void set(std::size_t i, bool on = true) noexcept { bits_[i] = on ? 1 : 0; }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> bits_;
};

/// 2D binary image, row-major.
struct Mask2D {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask2D() = default;
  Mask2D(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t size() const noexcept { return bits.size(); }
  bool at(int x, int y) const noexcept { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool on = true) noexcept { bits[static_cast<std::size_t>(y) * width + x] = on ? 1 : 0; }
  std::size_t count() const noexcept;

  friend bool operator==(const Mask2D&, const Mask2D&) = default;
};

/// 2*|a & b| / (|a| + |b|); two empty masks give 1.
double dice(const BinaryMask& a, const BinaryMask& b);

Mask2D axial_slice(const BinaryMask& m, int z);
void store_axial_slice(BinaryMask& m, int z, const Mask2D& slice);

}  // namespace ctproj
