#include "ctproj/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <png.h>

#include "ctproj/error.hpp"
#include "ctproj/parallel.hpp"
#include "io_util.hpp"

namespace ctproj {

using nlohmann::json;

HuRangeSet::HuRangeSet(HuRange air, HuRange lung, HuRange soft) : ranges_{air, lung, soft} {
  for (const auto& r : ranges_) {
    if (!(r.lo < r.hi)) fail(ErrorCode::InvalidArgument, "HU range must satisfy lo < hi");
  }
  if (ranges_[0].hi != ranges_[1].lo || ranges_[1].hi != ranges_[2].lo)
    fail(ErrorCode::InvalidArgument, "HU ranges must be contiguous and ordered");
}

int HuRangeSet::channel_of(int clamped_hu) const noexcept {
  if (clamped_hu < ranges_[1].lo) return 0;
  if (clamped_hu < ranges_[2].lo) return 1;
  return 2;
}

ProjectionImage::ProjectionImage(int w, int h, int c, float fill)
    : width(w), height(h), channels(c), samples(static_cast<std::size_t>(w) * h * c, fill) {
  if (w <= 0 || h <= 0) fail(ErrorCode::InvalidArgument, "image size must be positive");
  if (c != 1 && c != 3) fail(ErrorCode::InvalidArgument, "image must have 1 or 3 channels");
}

std::array<int, 2> projection_size(const Dims& d, Axis axis) {
  switch (axis) {
    case Axis::Z: return {d.nx, d.ny};
    case Axis::Y: return {d.nx, d.nz};
    case Axis::X: return {d.ny, d.nz};
  }
  return {0, 0};
}

std::array<int, 3> ray_voxel(const Dims& d, Axis axis, int u, int v, int t) noexcept {
  switch (axis) {
    case Axis::Z: return {u, v, t};
    case Axis::Y: return {u, d.ny - 1 - t, v};
    case Axis::X: return {t, u, v};
  }
  return {0, 0, 0};
}

namespace {

int ray_length(const Dims& d, Axis axis) { return d[static_cast<int>(axis)]; }

void check_pair(const HuVolume& v, const BinaryMask& m) {
  if (v.dims() != m.dims()) fail(ErrorCode::DimMismatch, "volume and mask dims differ");
}

}  // namespace

ProjectionImage aip(const HuVolume& v, const BinaryMask& m, Axis axis, const HuRangeSet& ranges) {
  check_pair(v, m);
  const Dims& d = v.dims();
  const auto [w, h] = projection_size(d, axis);
  const int n = ray_length(d, axis);
  ProjectionImage img(w, h, 1);
  parallel_for(h, [&](int row) {
    for (int u = 0; u < w; ++u) {
      double sum = 0.0;
      long count = 0;
      for (int t = 0; t < n; ++t) {
        const auto [x, y, z] = ray_voxel(d, axis, u, row, t);
        const std::size_t i = d.index(x, y, z);
        if (!m[i]) continue;
        sum += ranges.clamp(v[i]);
        ++count;
      }
      img.at(u, row) = count == 0 ? static_cast<float>(ranges.floor()) : static_cast<float>(sum / static_cast<double>(count));
    }
  });
  img.provenance.axis = axis;
  img.provenance.ranges = ranges;
  return img;
}

ProjectionImage aip_channels(const HuVolume& v, const BinaryMask& m, Axis axis, const HuRangeSet& ranges) {
  check_pair(v, m);
  const Dims& d = v.dims();
  const auto [w, h] = projection_size(d, axis);
  const int n = ray_length(d, axis);
  ProjectionImage img(w, h, 3);
  parallel_for(h, [&](int row) {
    for (int u = 0; u < w; ++u) {
      std::array<double, 3> sum{};
      std::array<long, 3> count{};
      for (int t = 0; t < n; ++t) {
        const auto [x, y, z] = ray_voxel(d, axis, u, row, t);
        const std::size_t i = d.index(x, y, z);
        if (!m[i]) continue;
        const int hu = ranges.clamp(v[i]);
        const int c = ranges.channel_of(hu);
        sum[c] += hu - ranges[c].lo;
        ++count[c];
      }
      for (int c = 0; c < 3; ++c)
        img.at(u, row, c) = count[c] == 0 ? 0.0f : static_cast<float>(sum[c] / static_cast<double>(count[c]));
    }
  });
  img.provenance.axis = axis;
  img.provenance.ranges = ranges;
  return img;
}

ProjectionImage normalize01(const ProjectionImage& img) {
  ProjectionImage out = img;
  const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
  out.provenance.normalized = true;
  out.provenance.norm_min.assign(static_cast<std::size_t>(img.channels), 0.0f);
  out.provenance.norm_max.assign(static_cast<std::size_t>(img.channels), 0.0f);
  for (int c = 0; c < img.channels; ++c) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (std::size_t p = 0; p < pixels; ++p) {
      const float s = img.samples[p * img.channels + c];
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    out.provenance.norm_min[c] = lo;
    out.provenance.norm_max[c] = hi;
    const double span = static_cast<double>(hi) - lo;
    for (std::size_t p = 0; p < pixels; ++p) {
      float& s = out.samples[p * img.channels + c];
      s = span > 0 ? std::clamp(static_cast<float>((s - static_cast<double>(lo)) / span), 0.0f, 1.0f) : 0.0f;
    }
  }
  return out;
}

json sidecar_json(const ProjectionImage& img) {
  json prov = json::object();
  prov["axis"] = img.provenance.axis ? json(std::string(axis_name(*img.provenance.axis))) : json(nullptr);
  if (img.provenance.ranges) {
    json r = json::array();
    for (const auto& band : img.provenance.ranges->ranges()) r.push_back({band.lo, band.hi});
    prov["hu_ranges"] = r;
  } else {
    prov["hu_ranges"] = nullptr;
  }
  prov["normalized"] = img.provenance.normalized;
  prov["norm_min"] = img.provenance.norm_min;
  prov["norm_max"] = img.provenance.norm_max;
  return {{"width", img.width},   {"height", img.height},    {"channels", img.channels},
          {"dtype", "f32le"},     {"layout", "interleaved"}, {"provenance", prov}};
}

void write_projection_raw(const std::filesystem::path& raw_path, const std::filesystem::path& json_path,
                          const ProjectionImage& img) {
  detail::write_file(raw_path, img.samples.data(), img.samples.size() * sizeof(float));
  detail::write_json(json_path, sidecar_json(img));
}

ProjectionImage read_projection_raw(const std::filesystem::path& raw_path, const std::filesystem::path& json_path) {
  const json j = detail::read_json(json_path);
  ProjectionImage img;
  try {
    if (j.value("dtype", std::string("f32le")) != "f32le") fail(ErrorCode::Parse, "projection dtype must be f32le");
    img = ProjectionImage(j.at("width").get<int>(), j.at("height").get<int>(), j.at("channels").get<int>());
    const json& prov = j.at("provenance");
    if (!prov.at("axis").is_null()) img.provenance.axis = parse_axis(prov["axis"].get<std::string>());
    if (!prov.at("hu_ranges").is_null()) {
      const auto& r = prov["hu_ranges"];
      if (r.size() != 3) fail(ErrorCode::Parse, "hu_ranges needs 3 bands");
      img.provenance.ranges = HuRangeSet({r[0][0].get<int>(), r[0][1].get<int>()}, {r[1][0].get<int>(), r[1][1].get<int>()},
                                         {r[2][0].get<int>(), r[2][1].get<int>()});
    }
    img.provenance.normalized = prov.at("normalized").get<bool>();
    img.provenance.norm_min = prov.at("norm_min").get<std::vector<float>>();
    img.provenance.norm_max = prov.at("norm_max").get<std::vector<float>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, json_path.string() + ": " + e.what());
  }
  img.samples = detail::decode_raw<float>(detail::read_file(raw_path), img.samples.size(), raw_path);
  return img;
}

void write_png(const std::filesystem::path& path, const ProjectionImage& img) {
  std::vector<std::uint8_t> bytes(img.samples.size());
  std::transform(img.samples.begin(), img.samples.end(), bytes.begin(), [](float s) {
    const double v = std::clamp(static_cast<double>(s), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
  });
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr))
    fail(ErrorCode::Io, "png encode failed: " + std::string(image.message));
  std::vector<std::uint8_t> encoded(size);
  if (!png_image_write_to_memory(&image, encoded.data(), &size, 0, bytes.data(), 0, nullptr))
    fail(ErrorCode::Io, "png encode failed: " + std::string(image.message));
  detail::write_file(path, encoded.data(), size);
}

}  // namespace ctproj
