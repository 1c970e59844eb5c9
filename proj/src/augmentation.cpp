#include "ctproj/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ctproj/error.hpp"
#include "ctproj/parallel.hpp"
#include "ctproj/rng.hpp"

namespace ctproj {

std::array<double, 3> rotation27_angles(int index, double step_deg) {
  if (index < 0 || index >= 27) fail(ErrorCode::InvalidArgument, "rotation index must lie in [0, 27)");
  return {(index / 9 - 1) * step_deg, ((index / 3) % 3 - 1) * step_deg, (index % 3 - 1) * step_deg};
}

std::vector<HuVolume> rotations27(const HuVolume& v, int fill_hu, double step_deg) {
  std::vector<HuVolume> out;
  out.reserve(27);
  for (int i = 0; i < 27; ++i) out.push_back(rotate3d(v, rotation27_angles(i, step_deg), fill_hu));
  return out;
}

BinaryMask rotate_mask3d(const BinaryMask& m, const Spacing& spacing, std::array<double, 3> angles_deg) {
  constexpr int kOn = 1000;
  std::vector<std::int16_t> scaled(m.dims().count());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = m[i] ? kOn : 0;
  const HuVolume rotated = rotate3d(HuVolume(m.dims(), spacing, std::move(scaled)), angles_deg, 0);
  BinaryMask out(m.dims());
  for (std::size_t i = 0; i < m.dims().count(); ++i) out.set(i, rotated[i] >= kOn / 2);
  return out;
}

void Augment2Spec::validate() const {
  if (!(max_rotation_deg >= 0.0)) fail(ErrorCode::InvalidArgument, "max_rotation_deg must be non-negative");
  if (!(scale_min > 0.0 && scale_min <= scale_max))
    fail(ErrorCode::InvalidArgument, "scale range must be positive and ordered");
}

Augment2Draw augment2d_draw(const Augment2Spec& spec, std::uint64_t draw_index) {
  auto rng = Xorshift64Star::for_stream(spec.rng_seed, draw_index);
  const double angle = rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg);
  const double scale = rng.uniform(spec.scale_min, spec.scale_max);
  return {angle, scale};
}

ProjectionImage rotate_scale2d(const ProjectionImage& img, double angle_deg, double scale) {
  if (!(scale > 0.0)) fail(ErrorCode::InvalidArgument, "scale must be positive");
  if (angle_deg == 0.0 && scale == 1.0) return img;

  const int w = img.width, h = img.height, ch = img.channels;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(t), st = std::sin(t);
  constexpr double kEps = 1e-9;

  ProjectionImage out = img;
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double sx = (ct * dx + st * dy) / scale + cx;
      const double sy = (-st * dx + ct * dy) / scale + cy;
      const bool inside = sx >= -kEps && sy >= -kEps && sx <= w - 1 + kEps && sy <= h - 1 + kEps;
      for (int c = 0; c < ch; ++c) {
        double value = 0.0;
        if (inside) {
          const double px = std::clamp(sx, 0.0, static_cast<double>(w - 1));
          const double py = std::clamp(sy, 0.0, static_cast<double>(h - 1));
          const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
          const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
          const double fx = px - x0, fy = py - y0;
          const double top = img.at(x0, y0, c) * (1 - fx) + img.at(x1, y0, c) * fx;
          const double bottom = img.at(x0, y1, c) * (1 - fx) + img.at(x1, y1, c) * fx;
          value = top * (1 - fy) + bottom * fy;
        }
        out.at(x, y, c) = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  });
  return out;
}

ProjectionImage augment2d(const ProjectionImage& img, const Augment2Spec& spec, std::uint64_t draw_index) {
  spec.validate();
  const Augment2Draw draw = augment2d_draw(spec, draw_index);
  return rotate_scale2d(img, draw.angle_deg, draw.scale);
}

}  // namespace ctproj
