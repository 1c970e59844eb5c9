#include "ctproj/volume_io.hpp"

#include <string>

#include "io_util.hpp"

namespace ctproj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json meta_json(const Dims& d, const Spacing& s, std::string_view dtype, std::string_view unit,
               std::string_view orientation) {
  json j;
  j["dims"] = {d.nx, d.ny, d.nz};
  j["spacing_mm"] = {s.sx, s.sy, s.sz};
  j["dtype"] = dtype;
  j["unit"] = unit;
  j["orientation"] = orientation;
  return j;
}

struct Meta {
  Dims dims;
  Spacing spacing;
  std::string dtype;
  std::string orientation;
};

Meta parse_meta(const fs::path& dir) {
  const json j = detail::read_json(dir / "meta.json");
  try {
    Meta m;
    const auto& d = j.at("dims");
    const auto& s = j.at("spacing_mm");
    if (d.size() != 3 || s.size() != 3) fail(ErrorCode::Parse, "meta.json: dims and spacing_mm need 3 entries");
    m.dims = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
    m.spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    m.dtype = j.at("dtype").get<std::string>();
    m.orientation = j.value("orientation", std::string(kDefaultOrientation));
    if (!m.dims.positive()) fail(ErrorCode::Parse, "meta.json: dims must be positive");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, (dir / "meta.json").string() + ": " + e.what());
  }
}

}  // namespace

void write_volume(const fs::path& dir, const HuVolume& v) {
  detail::write_json(dir / "meta.json", meta_json(v.dims(), v.spacing(), "i16le", "HU", v.orientation()));
  const auto data = v.data();
  detail::write_file(dir / "data.raw", data.data(), data.size_bytes());
}

HuVolume read_volume(const fs::path& dir) {
  const Meta m = parse_meta(dir);
  if (m.dtype != "i16le") fail(ErrorCode::Parse, (dir / "meta.json").string() + ": volume dtype must be i16le");
  auto samples =
      detail::decode_raw<std::int16_t>(detail::read_file(dir / "data.raw"), m.dims.count(), dir / "data.raw");
  return HuVolume(m.dims, m.spacing, std::move(samples), m.orientation);
}

void write_mask(const fs::path& dir, const BinaryMask& m, const Spacing& spacing, std::string_view orientation) {
  detail::write_json(dir / "meta.json", meta_json(m.dims(), spacing, "u8", "mask", orientation));
  const auto bits = m.bits();
  detail::write_file(dir / "data.raw", bits.data(), bits.size());
}

BinaryMask read_mask(const fs::path& dir) {
  const Meta m = parse_meta(dir);
  if (m.dtype != "u8") fail(ErrorCode::Parse, (dir / "meta.json").string() + ": mask dtype must be u8");
  auto bits = detail::decode_raw<std::uint8_t>(detail::read_file(dir / "data.raw"), m.dims.count(), dir / "data.raw");
  for (auto b : bits) {
    if (b > 1) fail(ErrorCode::Parse, (dir / "data.raw").string() + ": mask samples must be 0 or 1");
  }
  return BinaryMask(m.dims, std::move(bits));
}

}  // namespace ctproj
