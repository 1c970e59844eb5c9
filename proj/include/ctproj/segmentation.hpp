#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctproj/mask.hpp"
#include "ctproj/volume.hpp"

namespace ctproj {

inline constexpr int kDefaultThresholdHu = -570;

enum class MarkerLabel : std::uint8_t { Unlabeled = 0, Internal = 1, Intermediate = 2, External = 3 };

/// Per-pixel marker labels for one axial slice.
struct MarkerMap {
  int width = 0;
  int height = 0;
  std::vector<MarkerLabel> labels;

  MarkerLabel at(int x, int y) const noexcept { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count(MarkerLabel l) const noexcept;
};

/// Non-negative gradient magnitude image.
struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const noexcept { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Voxel set iff HU <= threshold_hu.
BinaryMask threshold_mask(const HuVolume& v, int threshold_hu = kDefaultThresholdHu);

/// Keeps components of at least min_voxels voxels that do not touch the
/// x = 0, x = nx-1, y = 0 or y = ny-1 faces. connectivity is 6 or 26.
BinaryMask filter_components(const BinaryMask& m, int min_voxels, int connectivity = 6);

/// 1 on internal, 2 on dilate(internal, r_int) minus internal, 3 on
/// dilate(internal, r_ext) minus dilate(internal, r_int). Throws EmptyMarkers
/// for an empty internal slice and InvalidArgument unless 0 < r_int < r_ext.
MarkerMap make_markers(const Mask2D& internal, int r_intermediate = 10, int r_external = 35);

/// sqrt(Gx^2 + Gy^2) with 3x3 Sobel kernels and edge replication.
EdgeMap sobel_edges(int width, int height, std::span<const std::int16_t> slice);
EdgeMap sobel_edges(int width, int height, std::span<const double> slice);

/// Basin owner per pixel: Internal, External, or Unlabeled when unreachable.
std::vector<MarkerLabel> watershed_labels(const EdgeMap& edges, const MarkerMap& markers);

/// Marker-seeded priority-flood watershed on 4-neighbours. Seeds are the
/// internal (1) and external (3) pixels; intermediate (2) and unlabeled (0)
/// pixels are flooded. A pixel joins the basin that first reaches it; the queue
/// is ordered by (edge value, insertion order, linear index). Returns the
/// internal catchment. Throws MissingMarkers without both seed kinds.
Mask2D watershed(const EdgeMap& edges, const MarkerMap& markers);

/// mask | (close(mask, r_close) \ mask).
Mask2D tophat_fill(const Mask2D& watershed_mask, int r_close);

/// Fills background components (4-connected) that do not reach the slice border.
Mask2D close_holes(const Mask2D& m);

/// Fills runs of at most max_gap unset voxels along z bounded by set voxels on
/// both ends, independently for every (x, y) column.
BinaryMask close_z_gaps(const BinaryMask& m, int max_gap = 3);

struct SegmentationParams {
  int threshold_hu = kDefaultThresholdHu;
  int min_component_voxels = 1000;
  int connectivity = 6;
  int r_intermediate = 10;
  int r_external = 35;
  int r_close = 6;
  int max_z_gap = 3;

  void validate() const;
};

enum class SegmentationStatus { Ok, NoAirVoxels, NoComponents };

struct SegmentationResult {
  BinaryMask mask;
  SegmentationStatus status = SegmentationStatus::Ok;

  bool warning() const noexcept { return status != SegmentationStatus::Ok; }
};

std::string status_message(SegmentationStatus s);

/// threshold -> component filter (3D) -> per axial slice: markers, Sobel,
/// watershed, top-hat fill, hole closing -> z-gap closing.
SegmentationResult segment_lungs(const HuVolume& v, const SegmentationParams& params = {});

}  // namespace ctproj
