#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ctproj/mask.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

/// Half-open HU interval [lo, hi).
struct HuRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const HuRange&, const HuRange&) = default;
};

/// Three contiguous ordered bands: air-like, lung, soft tissue. The last band
/// also owns its upper edge, so the clamped interval [front.lo, back.hi] is
/// partitioned exactly.
class HuRangeSet {
 public:
  HuRangeSet() : HuRangeSet({-1400, -900}, {-900, -160}, {-160, 240}) {}
  HuRangeSet(HuRange air, HuRange lung, HuRange soft);

  const std::array<HuRange, 3>& ranges() const noexcept { return ranges_; }
  const HuRange& operator[](int c) const noexcept { return ranges_[static_cast<std::size_t>(c)]; }
  int floor() const noexcept { return ranges_[0].lo; }
  int ceiling() const noexcept { return ranges_[2].hi; }

  int clamp(int hu) const noexcept { return hu < floor() ? floor() : (hu > ceiling() ? ceiling() : hu); }

  /// Channel owning an already-clamped HU value.
  int channel_of(int clamped_hu) const noexcept;

  friend bool operator==(const HuRangeSet&, const HuRangeSet&) = default;

 private:
  std::array<HuRange, 3> ranges_;
};

struct ProjectionProvenance {
  std::optional<Axis> axis;
  std::optional<HuRangeSet> ranges;
  bool normalized = false;
  std::vector<float> norm_min;
  std::vector<float> norm_max;
};

/// 2D image with 1 or 3 interleaved float channels:
/// sample(x, y, c) = samples[(y * width + x) * channels + c].
///
/// Image axes per projection axis (u = column, v = row):
///   Z (axial):    u = x, v = y, rays along +z
///   Y (coronal):  u = x, v = z, rays along -y
///   X (sagittal): u = y, v = z, rays along +x
/// Each (u, v, ray) triple is right-handed.
struct ProjectionImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> samples;
  ProjectionProvenance provenance;

  ProjectionImage() = default;
  ProjectionImage(int w, int h, int c, float fill = 0.0f);

  float at(int x, int y, int c = 0) const noexcept {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float& at(int x, int y, int c = 0) noexcept {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Image size for a projection of `dims` along `axis`.
std::array<int, 2> projection_size(const Dims& dims, Axis axis);

/// Grid coordinates of ray sample t for image pixel (u, v).
std::array<int, 3> ray_voxel(const Dims& dims, Axis axis, int u, int v, int t) noexcept;

/// Mean clamped HU over masked voxels on each ray; empty rays give the clamp floor.
ProjectionImage aip(const HuVolume& v, const BinaryMask& m, Axis axis, const HuRangeSet& ranges = {});

/// Per band: mean of (clamped HU - band.lo) over masked voxels in the band; empty gives 0.
ProjectionImage aip_channels(const HuVolume& v, const BinaryMask& m, Axis axis, const HuRangeSet& ranges = {});

/// Per-channel min-max rescale to [0, 1]; constant channels become zero.
ProjectionImage normalize01(const ProjectionImage& img);

// Export: PREFIX.raw holds float32 little-endian samples in the layout above,
// PREFIX.json the sidecar {width, height, channels, provenance}. PNG samples
// are round(sample * 255) after clamping to [0, 1].
nlohmann::json sidecar_json(const ProjectionImage& img);
void write_projection_raw(const std::filesystem::path& raw_path, const std::filesystem::path& json_path,
                          const ProjectionImage& img);
ProjectionImage read_projection_raw(const std::filesystem::path& raw_path, const std::filesystem::path& json_path);
void write_png(const std::filesystem::path& path, const ProjectionImage& img);

}  // namespace ctproj
