#include "ctproj/volume.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "ctproj/error.hpp"
#include "ctproj/parallel.hpp"

namespace ctproj {

std::string_view axis_name(Axis a) noexcept {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

Axis parse_axis(std::string_view s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  if (s == "z" || s == "Z") return Axis::Z;
  fail(ErrorCode::InvalidArgument, "unknown axis '" + std::string(s) + "'");
}

HuVolume::HuVolume(Dims dims, Spacing spacing, std::vector<std::int16_t> data, std::string orientation)
    : dims_(dims), spacing_(spacing), orientation_(std::move(orientation)), data_(std::move(data)) {
  if (!dims_.positive()) fail(ErrorCode::InvalidArgument, "volume dims must be positive");
  if (!(spacing_.sx > 0 && spacing_.sy > 0 && spacing_.sz > 0))
    fail(ErrorCode::InvalidArgument, "volume spacing must be positive");
  if (data_.size() != dims_.count())
    fail(ErrorCode::DimMismatch, "volume data length " + std::to_string(data_.size()) + " != " +
                                     std::to_string(dims_.count()));
  for (std::int16_t s : data_) {
    if (s < kMinHu || s > kMaxHu) fail(ErrorCode::InvalidArgument, "HU sample out of range: " + std::to_string(s));
  }
}

HuVolume HuVolume::filled(Dims dims, Spacing spacing, int hu, std::string orientation) {
  if (!dims.positive()) fail(ErrorCode::InvalidArgument, "volume dims must be positive");
  return HuVolume(dims, spacing, std::vector<std::int16_t>(dims.count(), static_cast<std::int16_t>(hu)),
                  std::move(orientation));
}

std::vector<std::int16_t> HuVolume::axial_slice(int z) const {
  const std::size_t plane = static_cast<std::size_t>(dims_.nx) * dims_.ny;
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(z));
  return {first, first + static_cast<std::ptrdiff_t>(plane)};
}

double sample_trilinear(const HuVolume& v, double x, double y, double z) noexcept {
  const Dims& d = v.dims();
  auto split = [](double c, int n, int& i0, int& i1, double& f) {
    c = std::clamp(c, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<int>(std::floor(c));
    i1 = std::min(i0 + 1, n - 1);
    f = c - i0;
  };
  int x0, x1, y0, y1, z0, z1;
  double fx, fy, fz;
  split(x, d.nx, x0, x1, fx);
  split(y, d.ny, y0, y1, fy);
  split(z, d.nz, z0, z1, fz);

  const double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x1, y0, z0) * fx;
  const double c10 = v.at(x0, y1, z0) * (1 - fx) + v.at(x1, y1, z0) * fx;
  const double c01 = v.at(x0, y0, z1) * (1 - fx) + v.at(x1, y0, z1) * fx;
  const double c11 = v.at(x0, y1, z1) * (1 - fx) + v.at(x1, y1, z1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

HuVolume resample(const HuVolume& v, Dims target) {
  if (!target.positive()) fail(ErrorCode::InvalidArgument, "resample target dims must be positive");
  const Dims& src = v.dims();
  if (target == src) return v;

  auto map = [](int dst, int n_in, int n_out) {
    return (dst + 0.5) * static_cast<double>(n_in) / n_out - 0.5;
  };
  std::vector<std::int16_t> out(target.count());
  parallel_for(target.nz, [&](int z) {
    const double sz = map(z, src.nz, target.nz);
    for (int y = 0; y < target.ny; ++y) {
      const double sy = map(y, src.ny, target.ny);
      for (int x = 0; x < target.nx; ++x) {
        const double sx = map(x, src.nx, target.nx);
        out[target.index(x, y, z)] =
            static_cast<std::int16_t>(clamp_hu(round_half_away(sample_trilinear(v, sx, sy, sz))));
      }
    }
  });
  const Spacing& s = v.spacing();
  Spacing spacing{s.sx * src.nx / target.nx, s.sy * src.ny / target.ny, s.sz * src.nz / target.nz};
  return HuVolume(target, spacing, std::move(out), v.orientation());
}

HuVolume downsample2(const HuVolume& v) {
  const Dims& src = v.dims();
  if (src.nx % 2 != 0 || src.ny % 2 != 0 || src.nz % 2 != 0)
    fail(ErrorCode::InvalidArgument, "downsample2 requires even dimensions");
  const Dims dst{src.nx / 2, src.ny / 2, src.nz / 2};
  std::vector<std::int16_t> out(dst.count());
  parallel_for(dst.nz, [&](int z) {
    for (int y = 0; y < dst.ny; ++y) {
      for (int x = 0; x < dst.nx; ++x) {
        long sum = 0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) sum += v.at(2 * x + dx, 2 * y + dy, 2 * z + dz);
        out[dst.index(x, y, z)] = static_cast<std::int16_t>(round_half_away(static_cast<double>(sum) / 8.0));
      }
    }
  });
  const Spacing& s = v.spacing();
  return HuVolume(dst, {s.sx * 2, s.sy * 2, s.sz * 2}, std::move(out), v.orientation());
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

Mat3 rotation_xyz(std::array<double, 3> deg) {
  const double ax = deg[0] * std::numbers::pi / 180.0;
  const double ay = deg[1] * std::numbers::pi / 180.0;
  const double az = deg[2] * std::numbers::pi / 180.0;
  const Mat3 rx{{{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}}};
  const Mat3 ry{{{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}}};
  const Mat3 rz{{{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}}};
  return mul(rz, mul(ry, rx));
}

}  // namespace

HuVolume rotate3d(const HuVolume& v, std::array<double, 3> angles_deg, int fill_hu) {
  for (double a : angles_deg) {
    if (!(std::abs(a) <= kMaxRotationDeg))
      fail(ErrorCode::InvalidArgument, "rotation angle must lie within +/-45 degrees");
  }
  if (fill_hu < kMinHu || fill_hu > kMaxHu) fail(ErrorCode::InvalidArgument, "fill HU out of range");
  if (angles_deg[0] == 0.0 && angles_deg[1] == 0.0 && angles_deg[2] == 0.0) return v;

  const Dims& d = v.dims();
  const Spacing& sp = v.spacing();
  const Mat3 r = rotation_xyz(angles_deg);
  const std::array<double, 3> c{(d.nx - 1) / 2.0, (d.ny - 1) / 2.0, (d.nz - 1) / 2.0};
  const std::array<double, 3> s{sp.sx, sp.sy, sp.sz};
  constexpr double kEps = 1e-9;

  std::vector<std::int16_t> out(d.count());
  parallel_for(d.nz, [&](int z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const std::array<double, 3> q{(x - c[0]) * s[0], (y - c[1]) * s[1], (z - c[2]) * s[2]};
        std::array<double, 3> src{};
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          // inverse rotation = transpose
          const double p = r[0][a] * q[0] + r[1][a] * q[1] + r[2][a] * q[2];
          src[a] = p / s[a] + c[a];
          if (src[a] < -kEps || src[a] > d[a] - 1 + kEps) inside = false;
        }
        const double value = inside ? sample_trilinear(v, src[0], src[1], src[2]) : fill_hu;
        out[d.index(x, y, z)] = static_cast<std::int16_t>(clamp_hu(round_half_away(value)));
      }
    }
  });
  return HuVolume(d, sp, std::move(out), v.orientation());
}

}  // namespace ctproj
