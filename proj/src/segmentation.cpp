#include "ctproj/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "ctproj/error.hpp"
#include "ctproj/morphology.hpp"
#include "ctproj/parallel.hpp"

namespace ctproj {

std::size_t MarkerMap::count(MarkerLabel l) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

BinaryMask threshold_mask(const HuVolume& v, int threshold_hu) {
  BinaryMask m(v.dims());
  const auto data = v.data();
  for (std::size_t i = 0; i < data.size(); ++i) m.set(i, data[i] <= threshold_hu);
  return m;
}

BinaryMask filter_components(const BinaryMask& m, int min_voxels, int connectivity) {
  if (min_voxels < 1) fail(ErrorCode::InvalidArgument, "min_voxels must be at least 1");
  if (connectivity != 6 && connectivity != 26) fail(ErrorCode::InvalidArgument, "connectivity must be 6 or 26");

  const Dims& d = m.dims();
  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (connectivity == 6 && manhattan != 1) continue;
        offsets.push_back({dx, dy, dz});
      }

  BinaryMask out(d);
  std::vector<std::uint8_t> seen(d.count(), 0);
  std::vector<std::size_t> component;
  std::vector<std::array<int, 3>> stack;

  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t start = d.index(x, y, z);
        if (!m[start] || seen[start]) continue;
        component.clear();
        bool touches_border = false;
        seen[start] = 1;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          const auto [cx, cy, cz] = stack.back();
          stack.pop_back();
          component.push_back(d.index(cx, cy, cz));
          if (cx == 0 || cy == 0 || cx == d.nx - 1 || cy == d.ny - 1) touches_border = true;
          for (const auto& o : offsets) {
            const int nx = cx + o[0], ny = cy + o[1], nz = cz + o[2];
            if (nx < 0 || ny < 0 || nz < 0 || nx >= d.nx || ny >= d.ny || nz >= d.nz) continue;
            const std::size_t ni = d.index(nx, ny, nz);
            if (!m[ni] || seen[ni]) continue;
            seen[ni] = 1;
            stack.push_back({nx, ny, nz});
          }
        }
        if (!touches_border && component.size() >= static_cast<std::size_t>(min_voxels)) {
          for (std::size_t i : component) out.set(i);
        }
      }
    }
  }
  return out;
}

MarkerMap make_markers(const Mask2D& internal, int r_intermediate, int r_external) {
  if (!(r_intermediate > 0 && r_intermediate < r_external))
    fail(ErrorCode::InvalidArgument, "marker radii must satisfy 0 < r_intermediate < r_external");
  if (internal.count() == 0) fail(ErrorCode::EmptyMarkers, "internal marker slice is empty");

  const auto d2 = squared_distance_transform(internal);
  const std::int64_t ri2 = static_cast<std::int64_t>(r_intermediate) * r_intermediate;
  const std::int64_t re2 = static_cast<std::int64_t>(r_external) * r_external;
  MarkerMap mm{internal.width, internal.height, std::vector<MarkerLabel>(internal.size(), MarkerLabel::Unlabeled)};
  for (std::size_t i = 0; i < d2.size(); ++i) {
    if (d2[i] == 0)
      mm.labels[i] = MarkerLabel::Internal;
    else if (d2[i] <= ri2)
      mm.labels[i] = MarkerLabel::Intermediate;
    else if (d2[i] <= re2)
      mm.labels[i] = MarkerLabel::External;
  }
  return mm;
}

namespace {

template <typename T>
EdgeMap sobel_impl(int w, int h, std::span<const T> s) {
  if (w <= 0 || h <= 0 || s.size() != static_cast<std::size_t>(w) * h)
    fail(ErrorCode::DimMismatch, "sobel: slice size does not match dimensions");
  auto px = [&](int x, int y) -> double {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return static_cast<double>(s[static_cast<std::size_t>(y) * w + x]);
  };
  EdgeMap e{w, h, std::vector<double>(s.size())};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      e.values[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return e;
}

}  // namespace

EdgeMap sobel_edges(int width, int height, std::span<const std::int16_t> slice) {
  return sobel_impl(width, height, slice);
}

EdgeMap sobel_edges(int width, int height, std::span<const double> slice) { return sobel_impl(width, height, slice); }

std::vector<MarkerLabel> watershed_labels(const EdgeMap& edges, const MarkerMap& markers) {
  if (edges.width != markers.width || edges.height != markers.height)
    fail(ErrorCode::DimMismatch, "watershed: edge map and markers differ in size");
  if (markers.count(MarkerLabel::Internal) == 0 || markers.count(MarkerLabel::External) == 0)
    fail(ErrorCode::MissingMarkers, "watershed needs at least one internal and one external marker");

  struct Entry {
    double value;
    std::uint64_t order;
    std::size_t index;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const noexcept {
      if (a.value != b.value) return a.value > b.value;
      if (a.order != b.order) return a.order > b.order;
      return a.index > b.index;
    }
  };

  const int w = edges.width, h = edges.height;
  std::vector<MarkerLabel> basin(markers.labels.size(), MarkerLabel::Unlabeled);
  std::priority_queue<Entry, std::vector<Entry>, Later> queue;
  std::uint64_t order = 0;

  for (std::size_t i = 0; i < basin.size(); ++i) {
    const MarkerLabel l = markers.labels[i];
    if (l == MarkerLabel::Internal || l == MarkerLabel::External) {
      basin[i] = l;
      queue.push({edges.values[i], order++, i});
    }
  }
  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    const int x = static_cast<int>(e.index % static_cast<std::size_t>(w));
    const int y = static_cast<int>(e.index / static_cast<std::size_t>(w));
    const int nbr[4][2] = {{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}};
    for (const auto& n : nbr) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
      const std::size_t ni = static_cast<std::size_t>(n[1]) * w + n[0];
      if (basin[ni] != MarkerLabel::Unlabeled) continue;
      basin[ni] = basin[e.index];
      queue.push({edges.values[ni], order++, ni});
    }
  }
  return basin;
}

Mask2D watershed(const EdgeMap& edges, const MarkerMap& markers) {
  const auto basin = watershed_labels(edges, markers);
  Mask2D out(edges.width, edges.height);
  for (std::size_t i = 0; i < basin.size(); ++i) out.bits[i] = basin[i] == MarkerLabel::Internal ? 1 : 0;
  return out;
}

Mask2D tophat_fill(const Mask2D& watershed_mask, int r_close) {
  if (r_close < 1) fail(ErrorCode::InvalidArgument, "r_close must be at least 1");
  const Mask2D closed = close_disc(watershed_mask, r_close);
  Mask2D out = watershed_mask;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (closed.bits[i] && !watershed_mask.bits[i]) out.bits[i] = 1;  // black top-hat added back
  }
  return out;
}

Mask2D close_holes(const Mask2D& m) {
  const int w = m.width, h = m.height;
  std::vector<std::uint8_t> outside(m.size(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!m.bits[i] && !outside[i]) {
      outside[i] = 1;
      stack.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    if (y > 0) seed(x, y - 1);
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y + 1 < h) seed(x, y + 1);
  }
  Mask2D out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out.bits[i] = outside[i] ? 0 : 1;
  return out;
}

BinaryMask close_z_gaps(const BinaryMask& m, int max_gap) {
  const Dims& d = m.dims();
  BinaryMask out = m;
  for (int y = 0; y < d.ny; ++y) {
    for (int x = 0; x < d.nx; ++x) {
      int last_set = -1;
      for (int z = 0; z < d.nz; ++z) {
        if (!m.at(x, y, z)) continue;
        const int gap = z - last_set - 1;
        if (last_set >= 0 && gap > 0 && gap <= max_gap) {
          for (int g = last_set + 1; g < z; ++g) out.set(x, y, g);
        }
        last_set = z;
      }
    }
  }
  return out;
}

void SegmentationParams::validate() const {
  if (min_component_voxels < 1) fail(ErrorCode::InvalidArgument, "min_component_voxels must be at least 1");
  if (connectivity != 6 && connectivity != 26) fail(ErrorCode::InvalidArgument, "connectivity must be 6 or 26");
  if (!(r_intermediate > 0 && r_intermediate < r_external))
    fail(ErrorCode::InvalidArgument, "marker radii must satisfy 0 < r_intermediate < r_external");
  if (r_close < 1) fail(ErrorCode::InvalidArgument, "r_close must be at least 1");
  if (max_z_gap < 0) fail(ErrorCode::InvalidArgument, "max_z_gap must be non-negative");
}

std::string status_message(SegmentationStatus s) {
  switch (s) {
    case SegmentationStatus::Ok: return "ok";
    case SegmentationStatus::NoAirVoxels: return "no voxel at or below the threshold; mask is empty";
    case SegmentationStatus::NoComponents: return "no component survived filtering; mask is empty";
  }
  return "?";
}

SegmentationResult segment_lungs(const HuVolume& v, const SegmentationParams& params) {
  params.validate();
  const Dims& d = v.dims();
  const BinaryMask thresholded = threshold_mask(v, params.threshold_hu);
  if (thresholded.empty()) return {BinaryMask(d), SegmentationStatus::NoAirVoxels};
  const BinaryMask internal = filter_components(thresholded, params.min_component_voxels, params.connectivity);
  if (internal.empty()) return {BinaryMask(d), SegmentationStatus::NoComponents};

  BinaryMask mask(d);
  parallel_for(d.nz, [&](int z) {
    const Mask2D seeds = axial_slice(internal, z);
    if (seeds.count() == 0) return;
    const MarkerMap markers = make_markers(seeds, params.r_intermediate, params.r_external);
    if (markers.count(MarkerLabel::External) == 0) {
      // Internal marker fills the slice; nothing to flood.
      store_axial_slice(mask, z, close_holes(seeds));
      return;
    }
    const auto slice = v.axial_slice(z);
    const EdgeMap edges = sobel_edges(d.nx, d.ny, std::span<const std::int16_t>(slice));
    const Mask2D basin = watershed(edges, markers);
    store_axial_slice(mask, z, close_holes(tophat_fill(basin, params.r_close)));
  });
  return {close_z_gaps(mask, params.max_z_gap), SegmentationStatus::Ok};
}

}  // namespace ctproj
