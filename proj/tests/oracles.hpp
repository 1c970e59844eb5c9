#pragma once
// Deliberately naive reference implementations. Nothing here calls into the
// library's algorithms beyond plain data types, so a shared bug cannot hide.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ctproj/gradcam.hpp"
#include "ctproj/mask.hpp"
#include "ctproj/projection.hpp"
#include "ctproj/rng.hpp"
#include "ctproj/segmentation.hpp"
#include "ctproj/volume.hpp"

namespace oracle {

using namespace ctproj;

inline Mask2D dilate(const Mask2D& m, int r) {
  Mask2D out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      for (int dy = -r; dy <= r && !out.at(x, y); ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = x + dx, sy = y + dy;
          if (dx * dx + dy * dy > r * r || sx < 0 || sy < 0 || sx >= m.width || sy >= m.height) continue;
          if (m.at(sx, sy)) {
            out.set(x, y);
            break;
          }
        }
  return out;
}

// Pixels beyond the image edge count as set.
inline Mask2D erode(const Mask2D& m, int r) {
  Mask2D out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = x + dx, sy = y + dy;
          if (dx * dx + dy * dy > r * r || sx < 0 || sy < 0 || sx >= m.width || sy >= m.height) continue;
          if (!m.at(sx, sy)) {
            all = false;
            break;
          }
        }
      out.set(x, y, all);
    }
  return out;
}

inline Mask2D close(const Mask2D& m, int r) { return erode(dilate(m, r), r); }

inline std::vector<double> sobel(int w, int h, const std::vector<double>& f) {
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return f[static_cast<std::size_t>(y) * w + x];
  };
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::vector<double> out(f.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = 0, gy = 0;
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
          gx += kx[j][i] * px(x + i - 1, y + j - 1);
          gy += ky[j][i] * px(x + i - 1, y + j - 1);
        }
      out[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return out;
}

// Linear-scan priority flood: each step picks the smallest (value, order, index)
// entry from an unsorted frontier list.
inline std::vector<MarkerLabel> watershed(const EdgeMap& e, const MarkerMap& mk) {
  struct Entry {
    double value;
    long order;
    int index;
  };
  const int n = e.width * e.height;
  std::vector<MarkerLabel> lab(n, MarkerLabel::Unlabeled);
  std::vector<Entry> frontier;
  long order = 0;
  for (int i = 0; i < n; ++i) {
    const MarkerLabel l = mk.labels[i];
    if (l == MarkerLabel::Internal || l == MarkerLabel::External) {
      lab[i] = l;
      frontier.push_back({e.values[i], order++, i});
    }
  }
  while (!frontier.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < frontier.size(); ++k) {
      const Entry& a = frontier[k];
      const Entry& b = frontier[best];
      if (a.value < b.value || (a.value == b.value && (a.order < b.order || (a.order == b.order && a.index < b.index))))
        best = k;
    }
    const Entry cur = frontier[best];
    frontier.erase(frontier.begin() + static_cast<long>(best));
    const int x = cur.index % e.width, y = cur.index / e.width;
    const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    for (const auto& p : nbr) {
      if (p[0] < 0 || p[1] < 0 || p[0] >= e.width || p[1] >= e.height) continue;
      const int j = p[1] * e.width + p[0];
      if (lab[j] != MarkerLabel::Unlabeled) continue;
      lab[j] = lab[cur.index];
      frontier.push_back({e.values[j], order++, j});
    }
  }
  return lab;
}

// Per-ray masked means with the image axes spelled out per axis.
inline ProjectionImage projection(const HuVolume& v, const BinaryMask& m, Axis axis, bool channels) {
  const Dims d = v.dims();
  const int lo[3] = {-1400, -900, -160};
  const int hi[3] = {-900, -160, 241};
  int w = 0, h = 0, len = 0;
  if (axis == Axis::Z) w = d.nx, h = d.ny, len = d.nz;
  if (axis == Axis::Y) w = d.nx, h = d.nz, len = d.ny;
  if (axis == Axis::X) w = d.ny, h = d.nz, len = d.nx;
  const int nc = channels ? 3 : 1;
  ProjectionImage out(w, h, nc);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double sum[3] = {0, 0, 0};
      int cnt[3] = {0, 0, 0};
      for (int t = 0; t < len; ++t) {
        int x = 0, y = 0, z = 0;
        if (axis == Axis::Z) x = c, y = r, z = t;
        if (axis == Axis::Y) x = c, y = t, z = r;
        if (axis == Axis::X) x = t, y = c, z = r;
        if (!m.at(x, y, z)) continue;
        const int hu = std::min(240, std::max(-1400, v.at(x, y, z)));
        if (!channels) {
          sum[0] += hu;
          cnt[0]++;
          continue;
        }
        for (int k = 0; k < 3; ++k)
          if (hu >= lo[k] && hu < hi[k]) {
            sum[k] += hu - lo[k];
            cnt[k]++;
          }
      }
      for (int k = 0; k < nc; ++k) {
        const double empty = channels ? 0.0 : -1400.0;
        out.at(c, r, k) = static_cast<float>(cnt[k] ? sum[k] / cnt[k] : empty);
      }
    }
  return out;
}

inline std::vector<long> block_mean(const std::vector<long>& f, int nx, int ny, int nz) {
  std::vector<long> out;
  for (int z = 0; z < nz / 2; ++z)
    for (int y = 0; y < ny / 2; ++y)
      for (int x = 0; x < nx / 2; ++x) {
        long s = 0;
        for (int k = 0; k < 8; ++k)
          s += f[(2 * x + (k & 1)) + nx * ((2 * y + ((k >> 1) & 1)) + ny * (2 * z + (k >> 2)))];
        // s / 8 rounded half away from zero in integer arithmetic.
        const long q = (2 * std::labs(s) + 8) / 16;
        out.push_back(s < 0 ? -q : q);
      }
  return out;
}

inline std::size_t ellipsoid_voxels(const Dims& d, std::array<double, 3> c, std::array<double, 3> a) {
  std::size_t n = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double q = (x - c[0]) * (x - c[0]) / (a[0] * a[0]) + (y - c[1]) * (y - c[1]) / (a[1] * a[1]) +
                         (z - c[2]) * (z - c[2]) / (a[2] * a[2]);
        n += q <= 1.0;
      }
  return n;
}

// Scalar-loop forward pass; returns the two logits.
inline std::array<double, 2> cnn_logits(const MicroCnn& net, const CnnInput& in) {
  const int H = in.height, W = in.width;
  auto conv = [&](const std::vector<double>& src, int cin, const std::vector<double>& w, const std::vector<double>& b,
                  int cout) {
    std::vector<double> dst(static_cast<std::size_t>(cout) * H * W);
    for (int o = 0; o < cout; ++o)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          double s = b[o];
          for (int i = 0; i < cin; ++i)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = x + kx - 1;
                if (sy < 0 || sx < 0 || sy >= H || sx >= W) continue;
                s += w[((o * cin + i) * 3 + ky) * 3 + kx] * src[(static_cast<std::size_t>(i) * H + sy) * W + sx];
              }
          dst[(static_cast<std::size_t>(o) * H + y) * W + x] = s > 0 ? s : 0;
        }
    return dst;
  };
  const auto a1 = conv(in.planes, 3, net.conv1_w, net.conv1_b, 8);
  const auto a2 = conv(a1, 8, net.conv2_w, net.conv2_b, 16);
  std::array<double, 2> logits{};
  for (int c = 0; c < 2; ++c) {
    double s = net.dense_b[c];
    for (int k = 0; k < 16; ++k) {
      double mean = 0;
      for (int p = 0; p < H * W; ++p) mean += a2[static_cast<std::size_t>(k) * H * W + p];
      s += net.dense_w[c * 16 + k] * mean / (H * W);
    }
    logits[c] = s;
  }
  return logits;
}

inline std::vector<double> gradcam(const MapStack& a, const MapStack& g) {
  std::vector<double> alpha(a.n, 0.0);
  for (int k = 0; k < a.n; ++k) {
    for (int i = 0; i < a.u; ++i)
      for (int j = 0; j < a.v; ++j) alpha[k] += g.at(k, i, j);
    alpha[k] /= a.u * a.v;
  }
  std::vector<double> out;
  for (int i = 0; i < a.u; ++i)
    for (int j = 0; j < a.v; ++j) {
      double s = 0;
      for (int k = 0; k < a.n; ++k) s += alpha[k] * a.at(k, i, j);
      out.push_back(s > 0 ? s : 0);
    }
  return out;
}

// Central differences of the class score with respect to each feature entry.
inline MapStack fd_feature_gradient(const MicroCnn& net, const FeatureMaps& a, int cls, ScoreKind kind, double h) {
  auto score = [&](const FeatureMaps& f) {
    const auto z = logits_from_features(net, f);
    if (kind == ScoreKind::Logit) return z[cls];
    const double m = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
    return (cls == 0 ? e0 : e1) / (e0 + e1);
  };
  MapStack g(a.maps.n, a.maps.u, a.maps.v);
  FeatureMaps work = a;
  for (std::size_t i = 0; i < work.maps.data.size(); ++i) {
    const double x = a.maps.data[i];
    work.maps.data[i] = x + h;
    const double up = score(work);
    work.maps.data[i] = x - h;
    const double down = score(work);
    work.maps.data[i] = x;
    g.data[i] = (up - down) / (2 * h);
  }
  return g;
}

// Relative error with a 1e-6 floor on the denominator. Central differences of
// O(1) scores carry about 1e-11 of absolute rounding noise at h = 1e-5, so
// gradients smaller than the floor are compared in absolute terms.
inline double max_relative_error(const MapStack& analytic, const MapStack& numeric) {
  double worst = 0;
  for (std::size_t i = 0; i < analytic.data.size(); ++i) {
    const double a = analytic.data[i], b = numeric.data[i];
    worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}));
  }
  return worst;
}

}  // namespace oracle

namespace testutil {

using namespace ctproj;

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("ctproj-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& s) const { return path / s; }
};

// Random field of six low-frequency cosines (wave numbers up to 0.2 rad/voxel)
// around -300 HU. Stands in for CT content at working resolution, which is
// far smoother than white noise.
inline HuVolume smooth_volume(Dims d, std::uint64_t seed) {
  Xorshift64Star rng(seed);
  struct Mode {
    double kx, ky, kz, phase, amp;
  };
  std::vector<Mode> modes;
  for (int i = 0; i < 6; ++i)
    modes.push_back({rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0, 6.28),
                     rng.uniform(50, 150)});
  std::vector<std::int16_t> data(d.count());
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        double s = -300;
        for (const auto& m : modes) s += m.amp * std::cos(m.kx * x + m.ky * y + m.kz * z + m.phase);
        data[d.index(x, y, z)] = static_cast<std::int16_t>(std::lround(s));
      }
  return HuVolume(d, {}, std::move(data));
}

// RMS difference over voxels at least `margin` voxels from every face.
inline double interior_rms(const HuVolume& a, const HuVolume& b, int margin) {
  const Dims d = a.dims();
  double se = 0;
  long n = 0;
  for (int z = margin; z < d.nz - margin; ++z)
    for (int y = margin; y < d.ny - margin; ++y)
      for (int x = margin; x < d.nx - margin; ++x) {
        const double e = a.at(x, y, z) - b.at(x, y, z);
        se += e * e;
        ++n;
      }
  return std::sqrt(se / static_cast<double>(n));
}

}  // namespace testutil
