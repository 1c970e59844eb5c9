#include "ctproj/morphology.hpp"

#include <vector>

#include "ctproj/error.hpp"

namespace ctproj {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

// Meijster, Roerdink & Hesselink two-phase exact EDT.
std::vector<std::int64_t> squared_distance_transform(const Mask2D& features) {
  const int w = features.width;
  const int h = features.height;
  const std::int64_t inf = static_cast<std::int64_t>(w) + h;
  std::vector<std::int64_t> g(static_cast<std::size_t>(w) * h);

  for (int x = 0; x < w; ++x) {
    std::int64_t run = inf;
    for (int y = 0; y < h; ++y) {
      run = features.at(x, y) ? 0 : (run >= inf ? inf : run + 1);
      g[static_cast<std::size_t>(y) * w + x] = run;
    }
    for (int y = h - 2; y >= 0; --y) {
      auto& cur = g[static_cast<std::size_t>(y) * w + x];
      const auto below = g[static_cast<std::size_t>(y + 1) * w + x];
      if (below + 1 < cur) cur = below + 1;
    }
  }

  std::vector<std::int64_t> out(g.size());
  std::vector<int> s(static_cast<std::size_t>(w)), t(static_cast<std::size_t>(w));
  const std::int64_t far_bound = inf * inf;
  for (int y = 0; y < h; ++y) {
    const std::int64_t* row = &g[static_cast<std::size_t>(y) * w];
    auto f = [&](std::int64_t x, int i) { return (x - i) * (x - i) + row[i] * row[i]; };
    auto sep = [&](int i, int u) {
      return floor_div(static_cast<std::int64_t>(u) * u - static_cast<std::int64_t>(i) * i + row[u] * row[u] - row[i] * row[i],
                       2 * static_cast<std::int64_t>(u - i));
    };
    int q = 0;
    s[0] = 0;
    t[0] = 0;
    for (int u = 1; u < w; ++u) {
      while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
      } else {
        const std::int64_t next = 1 + sep(s[q], u);
        if (next < w) {
          ++q;
          s[q] = u;
          t[q] = static_cast<int>(next);
        }
      }
    }
    for (int u = w - 1; u >= 0; --u) {
      const std::int64_t d = f(u, s[q]);
      out[static_cast<std::size_t>(y) * w + u] = d >= far_bound ? kFarSquared : d;
      if (u == t[q]) --q;
    }
  }
  return out;
}

Mask2D dilate_disc(const Mask2D& m, int radius) {
  if (radius < 0) fail(ErrorCode::InvalidArgument, "disc radius must be non-negative");
  const auto d2 = squared_distance_transform(m);
  const std::int64_t r2 = static_cast<std::int64_t>(radius) * radius;
  Mask2D out(m.width, m.height);
  for (std::size_t i = 0; i < d2.size(); ++i) out.bits[i] = d2[i] <= r2 ? 1 : 0;
  return out;
}

Mask2D erode_disc(const Mask2D& m, int radius) {
  if (radius < 0) fail(ErrorCode::InvalidArgument, "disc radius must be non-negative");
  Mask2D background(m.width, m.height);
  for (std::size_t i = 0; i < m.size(); ++i) background.bits[i] = m.bits[i] ? 0 : 1;
  const auto d2 = squared_distance_transform(background);
  const std::int64_t r2 = static_cast<std::int64_t>(radius) * radius;
  Mask2D out(m.width, m.height);
  for (std::size_t i = 0; i < d2.size(); ++i) out.bits[i] = d2[i] > r2 ? 1 : 0;
  return out;
}

Mask2D close_disc(const Mask2D& m, int radius) { return erode_disc(dilate_disc(m, radius), radius); }

}  // namespace ctproj
