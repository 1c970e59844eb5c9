#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "ctproj/error.hpp"
#include "ctproj/rng.hpp"
#include "oracles.hpp"

using namespace ctproj;

namespace {

MapStack random_stack(int n, int u, int v, Xorshift64Star& rng, double lo = -1, double hi = 1) {
  MapStack m(n, u, v);
  for (auto& x : m.data) x = rng.uniform(lo, hi);
  return m;
}

ProjectionImage random_input(int w, int h, std::uint64_t seed) {
  Xorshift64Star rng(seed);
  ProjectionImage img(w, h, 3);
  for (auto& s : img.samples) s = static_cast<float>(rng.uniform01());
  return img;
}

}  // namespace

TEST_CASE("gradcam worked examples") {
  MapStack a(1, 2, 2);
  a.data = {1, 2, 3, 4};
  const ClassGradients g{MapStack(1, 2, 2, 0.5), 1};
  const AlphaWeights w = alpha_weights(g);
  CHECK(w.alpha == std::vector<double>{0.5});
  CHECK(w.z == 4.0);
  const CamMap l = gradcam({a}, g);
  CHECK(l.u == 2);
  CHECK(l.v == 2);
  CHECK(l.values == std::vector<double>{0.5, 1, 1.5, 2});

  const CamMap zero = gradcam({a}, {MapStack(1, 2, 2, -1.0), 0});
  for (double x : zero.values) CHECK(x == 0.0);

  CHECK_THROWS_AS(gradcam({a}, {MapStack(1, 2, 3), 0}), Error);
  CHECK_THROWS_AS(gradcam({a}, {MapStack(2, 2, 2), 0}), Error);
}

TEST_CASE("gradcam equals the double-loop evaluation") {
  Xorshift64Star rng(1);
  for (int t = 0; t < 50; ++t) {
    const int n = t % 2 ? 4 : 1 + rng.uniform_int(0, 7);
    const int u = t % 2 ? 3 : 1 + rng.uniform_int(0, 6), v = t % 2 ? 3 : 1 + rng.uniform_int(0, 6);
    const MapStack a = random_stack(n, u, v, rng), g = random_stack(n, u, v, rng);
    const CamMap l = gradcam({a}, {g, 0});
    const auto expect = oracle::gradcam(a, g);
    REQUIRE(l.values.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(std::abs(l.values[i] - expect[i]) <= 1e-12);
      CHECK(l.values[i] >= 0.0);
    }
  }
}

TEST_CASE("gradcam scale covariance and linearity") {
  Xorshift64Star rng(2);
  for (int t = 0; t < 20; ++t) {
    const MapStack a = random_stack(5, 4, 6, rng), g = random_stack(5, 4, 6, rng);
    const CamMap base = gradcam({a}, {g, 1});
    for (double s : {0.1, 1.0, 10.0}) {
      MapStack sa = a, sg = g;
      for (auto& x : sa.data) x *= s;
      for (auto& x : sg.data) x /= s;
      const CamMap scaled = gradcam({sa}, {sg, 1});
      for (std::size_t i = 0; i < base.values.size(); ++i) CHECK(std::abs(scaled.values[i] - base.values[i]) <= 1e-12);
    }
  }
  // With non-negative activations and positive alphas the map is additive in A.
  for (int t = 0; t < 10; ++t) {
    const MapStack a1 = random_stack(3, 4, 4, rng, 0, 1), a2 = random_stack(3, 4, 4, rng, 0, 1);
    const MapStack g = random_stack(3, 4, 4, rng, 0.1, 1);
    MapStack sum = a1;
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += a2.data[i];
    const CamMap l1 = gradcam({a1}, {g, 0}), l2 = gradcam({a2}, {g, 0}), ls = gradcam({sum}, {g, 0});
    for (std::size_t i = 0; i < ls.values.size(); ++i)
      CHECK(ls.values[i] == doctest::Approx(l1.values[i] + l2.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("cam_overlay") {
  const CamMap flat{3, 3, std::vector<double>(9, 2.5)};
  for (float s : cam_overlay(flat, 7, 5).samples) CHECK(s == 0.0f);

  const CamMap two{2, 2, {1, 3, 5, 2}};
  const ProjectionImage same = cam_overlay(two, 2, 2);
  CHECK(same.samples == std::vector<float>{0, 0.5f, 1, 0.25f});

  const CamMap corner{2, 2, {0, 0, 0, 1}};
  const ProjectionImage up = cam_overlay(corner, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(up.at(x, y) == doctest::Approx((x / 3.0) * (y / 3.0)).epsilon(1e-6));
  CHECK(up.at(3, 3) == 1.0f);

  // Wide target: columns follow v, rows follow u.
  const CamMap row{1, 2, {0, 1}};
  const ProjectionImage wide = cam_overlay(row, 3, 2);
  CHECK(wide.at(1, 0) == doctest::Approx(0.5));
  CHECK(wide.at(2, 1) == 1.0f);
  CHECK_THROWS_AS(cam_overlay(corner, 0, 4), Error);
}

TEST_CASE("forward pass") {
  const ProjectionImage img = random_input(8, 8, 3);
  const ForwardCache z = forward(MicroCnn::zeros(), img);
  CHECK(z.logits == std::array<double, 2>{0, 0});
  CHECK(z.probabilities == std::array<double, 2>{0.5, 0.5});

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MicroCnn net = MicroCnn::random(seed);
    const ProjectionImage in = random_input(8, 8, seed + 10);
    const ForwardCache c = forward(net, in);
    CHECK(std::abs(c.probabilities[0] + c.probabilities[1] - 1.0) <= 1e-12);
    const auto expect = oracle::cnn_logits(net, CnnInput::from_image(in));
    CHECK(std::abs(c.logits[0] - expect[0]) <= 1e-12);
    CHECK(std::abs(c.logits[1] - expect[1]) <= 1e-12);
    CHECK(c.features.maps.n == 16);
    CHECK(c.features.maps.u == 8);
    for (double a : c.features.maps.data) CHECK(a >= 0.0);
    CHECK(logits_from_features(net, c.features) == c.logits);
  }
  CHECK_THROWS_AS(forward(MicroCnn::zeros(), ProjectionImage(4, 4, 1)), Error);
}

TEST_CASE("random init is seeded and bounded by 1/sqrt(fan_in)") {
  const MicroCnn a = MicroCnn::random(7), b = MicroCnn::random(7), c = MicroCnn::random(8);
  CHECK(a.conv2_w == b.conv2_w);
  CHECK(a.dense_w != c.dense_w);
  for (double w : a.conv1_w) CHECK(std::abs(w) <= 1 / std::sqrt(27.0));
  for (double w : a.conv2_w) CHECK(std::abs(w) <= 1 / std::sqrt(72.0));
  for (double w : a.dense_w) CHECK(std::abs(w) <= 0.25);
}

TEST_CASE("backward to features: analytic form and finite differences") {
  MicroCnn zero_dense = MicroCnn::random(3);
  std::fill(zero_dense.dense_w.begin(), zero_dense.dense_w.end(), 0.0);
  const ForwardCache zc = forward(zero_dense, random_input(6, 6, 1));
  for (double g : backward_to_features(zero_dense, zc, 1).maps.data) CHECK(g == 0.0);

  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const MicroCnn net = MicroCnn::random(seed);
    const ForwardCache c = forward(net, random_input(16, 16, seed + 100));
    for (int cls : {0, 1}) {
      const ClassGradients g = backward_to_features(net, c, cls);
      CHECK(g.class_index == cls);
      for (int k = 0; k < 16; ++k)
        for (int i = 0; i < 16; ++i)
          for (int j = 0; j < 16; ++j) CHECK(g.maps.at(k, i, j) == doctest::Approx(net.dense(cls, k) / 256.0).epsilon(1e-14));
      for (ScoreKind kind : {ScoreKind::Logit, ScoreKind::Softmax}) {
        const MapStack fd = oracle::fd_feature_gradient(net, c.features, cls, kind, 1e-5);
        CHECK(oracle::max_relative_error(backward_to_features(net, c, cls, kind).maps, fd) <= 1e-4);
      }
    }
  }
  CHECK_THROWS_AS(backward_to_features(MicroCnn::zeros(), zc, 2), Error);
  CHECK_THROWS_AS(backward_to_features(MicroCnn::zeros(), ForwardCache{}, 0), Error);
}

TEST_CASE("a channel-selective head localizes on that channel") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MicroCnn net = MicroCnn::random(seed);
    const int k0 = static_cast<int>(seed * 3 % 16);
    std::fill(net.dense_w.begin(), net.dense_w.end(), 0.0);
    net.dense_w[16 + static_cast<std::size_t>(k0)] = 1.0;
    const ForwardCache c = forward(net, random_input(12, 10, seed));
    const CamMap cam = gradcam(c.features, backward_to_features(net, c, 1));
    const MapStack& a = c.features.maps;
    std::size_t best_cam = 0, best_a = 0;
    for (std::size_t p = 0; p < cam.values.size(); ++p) {
      if (cam.values[p] > cam.values[best_cam]) best_cam = p;
      if (a.data[static_cast<std::size_t>(k0) * cam.values.size() + p] >
          a.data[static_cast<std::size_t>(k0) * cam.values.size() + best_a])
        best_a = p;
    }
    CHECK(best_cam == best_a);
  }
}

TEST_CASE("weight files round trip") {
  testutil::TempDir tmp;
  const MicroCnn net = MicroCnn::random(42);
  save_weights(tmp / "w.json", tmp / "w.bin", net);
  const MicroCnn back = load_weights(tmp / "w.json", tmp / "w.bin");
  CHECK(back.conv1_w == net.conv1_w);
  CHECK(back.conv2_b == net.conv2_b);
  CHECK(back.dense_w == net.dense_w);
  CHECK(back.seed == 42);
  CHECK(std::filesystem::file_size(tmp / "w.bin") == 8 * (216 + 8 + 1152 + 16 + 32 + 2));

  const auto manifest = nlohmann::json::parse(std::ifstream(tmp / "w.json"));
  CHECK(manifest["format"] == "microcnn-v1");
  CHECK(manifest["tensors"][0]["name"] == "conv1.weight");
  CHECK(manifest["tensors"][0]["shape"] == nlohmann::json::array({8, 3, 3, 3}));
  CHECK(manifest["tensors"][4]["shape"] == nlohmann::json::array({2, 16}));

  std::filesystem::resize_file(tmp / "w.bin", 100);
  CHECK_THROWS_AS(load_weights(tmp / "w.json", tmp / "w.bin"), Error);
  std::ofstream(tmp / "bad.json") << R"({"format":"other"})";
  CHECK_THROWS_AS(load_weights(tmp / "bad.json", tmp / "w.bin"), Error);
}
