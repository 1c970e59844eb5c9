#include "ctproj/mask.hpp"

#include <algorithm>
#include <string>

#include "ctproj/error.hpp"

namespace ctproj {

BinaryMask::BinaryMask(Dims dims) : dims_(dims), bits_(dims.count(), 0) {}

BinaryMask::BinaryMask(Dims dims, std::vector<std::uint8_t> bits) : dims_(dims), bits_(std::move(bits)) {
  if (bits_.size() != dims_.count())
    fail(ErrorCode::DimMismatch, "mask length " + std::to_string(bits_.size()) + " != " + std::to_string(dims_.count()));
  for (auto& b : bits_) {
    if (b > 1) fail(ErrorCode::InvalidArgument, "mask samples must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::size_t Mask2D::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.dims() != b.dims()) fail(ErrorCode::DimMismatch, "dice: mask dims differ");
  std::size_t both = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dims().count(); ++i) {
    na += a[i];
    nb += b[i];
    both += a[i] && b[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

Mask2D axial_slice(const BinaryMask& m, int z) {
  const Dims& d = m.dims();
  Mask2D s(d.nx, d.ny);
  const auto bits = m.bits();
  std::copy_n(bits.begin() + static_cast<std::ptrdiff_t>(d.index(0, 0, z)), s.size(), s.bits.begin());
  return s;
}

void store_axial_slice(BinaryMask& m, int z, const Mask2D& slice) {
  const Dims& d = m.dims();
  if (slice.width != d.nx || slice.height != d.ny) fail(ErrorCode::DimMismatch, "slice does not match mask");
  auto bits = m.bits();
  std::transform(slice.bits.begin(), slice.bits.end(), bits.begin() + static_cast<std::ptrdiff_t>(d.index(0, 0, z)),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b != 0); });
}

}  // namespace ctproj
