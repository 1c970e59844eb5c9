#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ctproj/mask.hpp"
#include "ctproj/projection.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

inline constexpr double kRotationStepDeg = 5.0;

/// (ax, ay, az) for rotations27 element i, lexicographic over {-step, 0, +step}^3.
std::array<double, 3> rotation27_angles(int index, double step_deg = kRotationStepDeg);

/// 27 rotated copies; element 13 is the input itself.
std::vector<HuVolume> rotations27(const HuVolume& v, int fill_hu, double step_deg = kRotationStepDeg);

/// Same transform as rotate3d applied to a mask: trilinear on 0/1 with a 0.5 cut.
BinaryMask rotate_mask3d(const BinaryMask& m, const Spacing& spacing, std::array<double, 3> angles_deg);

struct Augment2Spec {
  double max_rotation_deg = 20.0;
  double scale_min = 0.8;
  double scale_max = 1.2;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct Augment2Draw {
  double angle_deg;
  double scale;
};

/// Draw for one index: Xorshift64Star::for_stream(seed, draw_index), first
/// uniform01 gives the angle, second the scale.
Augment2Draw augment2d_draw(const Augment2Spec& spec, std::uint64_t draw_index);

/// Bilinear rotate+scale about the image centre, zero fill, same size,
/// samples clamped to [0, 1].
ProjectionImage augment2d(const ProjectionImage& img, const Augment2Spec& spec, std::uint64_t draw_index);
ProjectionImage rotate_scale2d(const ProjectionImage& img, double angle_deg, double scale);

}  // namespace ctproj
