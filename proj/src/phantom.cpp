#include "ctproj/phantom.hpp"

#include <cmath>
#include <string>

#include "ctproj/error.hpp"
#include "ctproj/rng.hpp"

namespace ctproj {

using nlohmann::json;

bool Ellipsoid::contains(double x, double y, double z) const noexcept {
  double s = 0.0;
  const double p[3] = {x, y, z};
  for (int a = 0; a < 3; ++a) {
    if (semi_axes[a] <= 0) return false;
    const double t = (p[a] - center[a]) / semi_axes[a];
    s += t * t;
  }
  return s <= 1.0;
}

bool BodySpec::contains(double x, double y) const noexcept {
  if (semi_axes[0] <= 0 || semi_axes[1] <= 0) return false;
  const double tx = (x - center[0]) / semi_axes[0];
  const double ty = (y - center[1]) / semi_axes[1];
  return tx * tx + ty * ty <= 1.0;
}

std::string lesion_kind_name(LesionKind k) {
  switch (k) {
    case LesionKind::Cavity: return "cavity";
    case LesionKind::FungusBall: return "fungus_ball";
    case LesionKind::PleuraThickening: return "pleura_thickening";
  }
  return "?";
}

LesionKind parse_lesion_kind(const std::string& s) {
  if (s == "cavity") return LesionKind::Cavity;
  if (s == "fungus_ball") return LesionKind::FungusBall;
  if (s == "pleura_thickening") return LesionKind::PleuraThickening;
  fail(ErrorCode::InvalidSpec, "unknown lesion kind '" + s + "'");
}

PhantomSpec default_phantom_spec(std::uint64_t seed) {
  PhantomSpec s;
  s.dims = {128, 128, 128};
  s.rng_seed = seed;
  s.lungs[0] = {{37, 64, 64}, {15, 24, 40}};
  s.lungs[1] = {{91, 64, 64}, {15, 24, 40}};
  s.body = {{64, 64}, {60, 50}};
  return s;
}

namespace {

double dist2(const Vec3& a, double x, double y, double z) {
  const double dx = x - a[0], dy = y - a[1], dz = z - a[2];
  return dx * dx + dy * dy + dz * dz;
}

bool in_sphere(const Lesion& l, double x, double y, double z) { return dist2(l.center, x, y, z) <= l.radius * l.radius; }

Vec3 pleura_anchor(const Ellipsoid& lung, const Vec3& dir) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += (dir[a] / lung.semi_axes[a]) * (dir[a] / lung.semi_axes[a]);
  const double k = 1.0 / std::sqrt(s);
  return {lung.center[0] + dir[0] * k, lung.center[1] + dir[1] * k, lung.center[2] + dir[2] * k};
}

struct PleuraGeometry {
  Ellipsoid inner;
  Vec3 anchor;
};

PleuraGeometry pleura_geometry(const PhantomSpec& spec, const Lesion& l) {
  const Ellipsoid& lung = spec.lungs[static_cast<std::size_t>(l.lung)];
  Ellipsoid inner = lung;
  for (int a = 0; a < 3; ++a) inner.semi_axes[a] = std::max(0.0, lung.semi_axes[a] - l.thickness_voxels);
  return {inner, pleura_anchor(lung, l.direction)};
}

bool in_pleura(const PhantomSpec& spec, const Lesion& l, const PleuraGeometry& g, double x, double y, double z) {
  const Ellipsoid& lung = spec.lungs[static_cast<std::size_t>(l.lung)];
  return lung.contains(x, y, z) && !g.inner.contains(x, y, z) &&
         dist2(g.anchor, x, y, z) <= l.patch_radius * l.patch_radius;
}

template <typename Fn>
void for_each_voxel(const Dims& d, Fn&& fn) {
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) fn(x, y, z);
}

[[noreturn]] void bad_spec(const std::string& what) { fail(ErrorCode::InvalidSpec, what); }

}  // namespace

void validate(const PhantomSpec& spec) {
  const Dims& d = spec.dims;
  if (!d.positive()) bad_spec("phantom dims must be positive");
  if (!(spec.spacing.sx > 0 && spec.spacing.sy > 0 && spec.spacing.sz > 0)) bad_spec("phantom spacing must be positive");
  if (spec.noise_hu < 0 || spec.noise_hu > 500) bad_spec("noise_hu must lie in [0, 500]");
  for (const auto& lung : spec.lungs) {
    for (double a : lung.semi_axes)
      if (!(a > 0)) bad_spec("lung semi-axes must be positive");
  }
  if (!(spec.body.semi_axes[0] > 0 && spec.body.semi_axes[1] > 0)) bad_spec("body semi-axes must be positive");

  for (const auto& l : spec.lesions) {
    if (l.lung != 0 && l.lung != 1) bad_spec("lesion lung index must be 0 or 1");
    if (l.kind == LesionKind::PleuraThickening) {
      if (!(l.thickness_voxels >= 1)) bad_spec("pleura thickness must be at least 1 voxel");
      if (!(l.patch_radius > 0)) bad_spec("pleura patch_radius must be positive");
      if (l.direction[0] == 0 && l.direction[1] == 0 && l.direction[2] == 0) bad_spec("pleura direction is zero");
    } else if (!(l.radius > 0)) {
      bad_spec(lesion_kind_name(l.kind) + " radius must be positive");
    }
  }

  // Fungus balls must sit strictly inside a cavity of the same lung.
  for (const auto& ball : spec.lesions) {
    if (ball.kind != LesionKind::FungusBall) continue;
    bool held = false;
    for (const auto& cav : spec.lesions) {
      if (cav.kind != LesionKind::Cavity || cav.lung != ball.lung) continue;
      const double c = std::sqrt(dist2(cav.center, ball.center[0], ball.center[1], ball.center[2]));
      if (c + ball.radius < cav.radius) held = true;
    }
    if (!held) bad_spec("fungus_ball is not strictly inside a cavity of the same lung");
  }

  std::vector<PleuraGeometry> pleura(spec.lesions.size());
  for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
    if (spec.lesions[i].kind == LesionKind::PleuraThickening) pleura[i] = pleura_geometry(spec, spec.lesions[i]);
  }
  std::vector<std::size_t> lesion_voxels(spec.lesions.size(), 0);
  std::array<std::size_t, 2> lung_voxels{0, 0};

  for_each_voxel(d, [&](int x, int y, int z) {
    const bool l0 = spec.lungs[0].contains(x, y, z);
    const bool l1 = spec.lungs[1].contains(x, y, z);
    if (l0 && l1) bad_spec("lung ellipsoids overlap");
    if (l0 || l1) {
      lung_voxels[l0 ? 0 : 1]++;
      if (x == 0 || y == 0 || x == d.nx - 1 || y == d.ny - 1) bad_spec("lung touches the grid border");
      if (!spec.body.contains(x, y)) bad_spec("lung extends outside the body");
    }
    bool cavity_here = false;
    bool pleura_here = false;
    for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
      const Lesion& l = spec.lesions[i];
      const bool in = l.kind == LesionKind::PleuraThickening ? in_pleura(spec, l, pleura[i], x, y, z)
                                                             : in_sphere(l, x, y, z);
      if (!in) continue;
      ++lesion_voxels[i];
      if (!spec.lungs[static_cast<std::size_t>(l.lung)].contains(x, y, z))
        bad_spec(lesion_kind_name(l.kind) + " extends outside its lung");
      cavity_here |= l.kind == LesionKind::Cavity;
      pleura_here |= l.kind == LesionKind::PleuraThickening;
    }
    if (cavity_here && pleura_here) bad_spec("pleura_thickening overlaps a cavity");
  });
  if (lung_voxels[0] == 0 || lung_voxels[1] == 0) bad_spec("each lung must contain at least one voxel");
  for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
    if (lesion_voxels[i] == 0) bad_spec(lesion_kind_name(spec.lesions[i].kind) + " covers no voxel");
  }
}

Phantom generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  const Dims& d = spec.dims;

  std::vector<PleuraGeometry> pleura(spec.lesions.size());
  for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
    if (spec.lesions[i].kind == LesionKind::PleuraThickening) pleura[i] = pleura_geometry(spec, spec.lesions[i]);
  }

  std::vector<std::int16_t> data(d.count());
  BinaryMask truth(d), balls(d), pleura_mask(d), cavities(d);
  std::vector<std::size_t> counts(spec.lesions.size(), 0);
  Xorshift64Star rng(spec.rng_seed);

  for_each_voxel(d, [&](int x, int y, int z) {
    const std::size_t idx = d.index(x, y, z);
    int hu = spec.body.contains(x, y) ? kBodyHu : kAirHu;
    const bool lung = spec.lungs[0].contains(x, y, z) || spec.lungs[1].contains(x, y, z);
    if (lung) {
      truth.set(idx);
      bool cavity = false, ball = false, thick = false;
      for (std::size_t i = 0; i < spec.lesions.size(); ++i) {
        const Lesion& l = spec.lesions[i];
        bool in = false;
        switch (l.kind) {
          case LesionKind::Cavity: in = in_sphere(l, x, y, z); cavity |= in; break;
          case LesionKind::FungusBall: in = in_sphere(l, x, y, z); ball |= in; break;
          case LesionKind::PleuraThickening: in = in_pleura(spec, l, pleura[i], x, y, z); thick |= in; break;
        }
        counts[i] += in;
      }
      if (ball) {
        hu = kFungusBallHu;
        balls.set(idx);
      } else if (cavity) {
        hu = kCavityHu;
        cavities.set(idx);
      } else if (thick) {
        hu = kPleuraHu;
        pleura_mask.set(idx);
      } else {
        hu = kParenchymaHu;
        if (spec.noise && spec.noise_hu > 0) hu += rng.uniform_int(-spec.noise_hu, spec.noise_hu);
      }
    }
    data[idx] = static_cast<std::int16_t>(hu);
  });

  Phantom p{HuVolume(d, spec.spacing, std::move(data)), std::move(truth), std::move(balls), std::move(pleura_mask),
            std::move(cavities), {}};
  for (std::size_t i = 0; i < spec.lesions.size(); ++i)
    p.lesions.push_back({spec.lesions[i].kind, spec.lesions[i].lung, counts[i]});
  return p;
}

void to_json(json& j, const PhantomSpec& s) {
  j = json::object();
  j["dims"] = {s.dims.nx, s.dims.ny, s.dims.nz};
  j["spacing_mm"] = {s.spacing.sx, s.spacing.sy, s.spacing.sz};
  j["rng_seed"] = s.rng_seed;
  j["noise"] = s.noise;
  j["noise_hu"] = s.noise_hu;
  j["lungs"] = json::array();
  for (const auto& l : s.lungs) j["lungs"].push_back({{"center", l.center}, {"semi_axes", l.semi_axes}});
  j["body"] = {{"center", s.body.center}, {"semi_axes", s.body.semi_axes}};
  j["lesions"] = json::array();
  for (const auto& l : s.lesions) {
    json e{{"kind", lesion_kind_name(l.kind)}, {"lung", l.lung}};
    if (l.kind == LesionKind::PleuraThickening) {
      e["direction"] = l.direction;
      e["patch_radius"] = l.patch_radius;
      e["thickness_voxels"] = l.thickness_voxels;
    } else {
      e["center"] = l.center;
      e["radius"] = l.radius;
    }
    j["lesions"].push_back(std::move(e));
  }
}

void from_json(const json& j, PhantomSpec& s) {
  try {
    s = PhantomSpec{};
    const auto& d = j.at("dims");
    if (d.size() != 3) bad_spec("dims needs 3 entries");
    s.dims = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
    if (j.contains("spacing_mm")) {
      const auto& sp = j["spacing_mm"];
      if (sp.size() != 3) bad_spec("spacing_mm needs 3 entries");
      s.spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
    }
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    s.noise = j.value("noise", true);
    s.noise_hu = j.value("noise_hu", 30);
    const auto& lungs = j.at("lungs");
    if (lungs.size() != 2) bad_spec("exactly two lungs are required");
    for (std::size_t i = 0; i < 2; ++i) {
      s.lungs[i].center = lungs[i].at("center").get<Vec3>();
      s.lungs[i].semi_axes = lungs[i].at("semi_axes").get<Vec3>();
    }
    s.body.center = j.at("body").at("center").get<std::array<double, 2>>();
    s.body.semi_axes = j.at("body").at("semi_axes").get<std::array<double, 2>>();
    for (const auto& e : j.value("lesions", json::array())) {
      Lesion l;
      l.kind = parse_lesion_kind(e.at("kind").get<std::string>());
      l.lung = e.at("lung").get<int>();
      if (l.kind == LesionKind::PleuraThickening) {
        l.direction = e.at("direction").get<Vec3>();
        l.patch_radius = e.at("patch_radius").get<double>();
        l.thickness_voxels = e.at("thickness_voxels").get<double>();
      } else {
        l.center = e.at("center").get<Vec3>();
        l.radius = e.at("radius").get<double>();
      }
      s.lesions.push_back(l);
    }
  } catch (const json::exception& e) {
    bad_spec(std::string("phantom spec: ") + e.what());
  }
}

json lesion_inventory_json(const Phantom& p) {
  json j = json::array();
  for (const auto& l : p.lesions)
    j.push_back({{"kind", lesion_kind_name(l.kind)}, {"lung", l.lung}, {"voxel_count", l.voxel_count}});
  return j;
}

}  // namespace ctproj
