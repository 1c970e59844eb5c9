#pragma once

#include <cstdint>
#include <vector>

#include "ctproj/mask.hpp"

namespace ctproj {

/// Exact squared Euclidean distance from every pixel to the nearest set pixel
/// of `features` (Meijster two-pass separable transform). Pixels with no
/// reachable feature get kFarSquared.
inline constexpr std::int64_t kFarSquared = std::int64_t{1} << 60;
std::vector<std::int64_t> squared_distance_transform(const Mask2D& features);

/// Dilation by the Euclidean disc {dx^2 + dy^2 <= r^2}. Nothing outside the image is set.
Mask2D dilate_disc(const Mask2D& m, int radius);

/// Erosion by the same disc; pixels outside the image count as foreground.
Mask2D erode_disc(const Mask2D& m, int radius);

/// Dilate then erode. Extensive and idempotent under the border rules above.
Mask2D close_disc(const Mask2D& m, int radius);

}  // namespace ctproj
