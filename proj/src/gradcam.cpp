#include "ctproj/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctproj/error.hpp"
#include "ctproj/rng.hpp"
#include "io_util.hpp"

namespace ctproj {

using nlohmann::json;

AlphaWeights alpha_weights(const ClassGradients& g) {
  const MapStack& m = g.maps;
  AlphaWeights a;
  a.z = static_cast<double>(m.u) * m.v;
  a.alpha.assign(static_cast<std::size_t>(m.n), 0.0);
  for (int k = 0; k < m.n; ++k) {
    double s = 0.0;
    for (int i = 0; i < m.u; ++i)
      for (int j = 0; j < m.v; ++j) s += m.at(k, i, j);
    a.alpha[static_cast<std::size_t>(k)] = s / a.z;
  }
  return a;
}

CamMap gradcam(const FeatureMaps& a, const ClassGradients& g) {
  if (!a.maps.same_shape(g.maps)) fail(ErrorCode::DimMismatch, "feature maps and gradients differ in shape");
  if (a.maps.n <= 0 || a.maps.u <= 0 || a.maps.v <= 0) fail(ErrorCode::InvalidArgument, "empty feature maps");
  const AlphaWeights w = alpha_weights(g);
  const MapStack& A = a.maps;
  CamMap cam{A.u, A.v, std::vector<double>(static_cast<std::size_t>(A.u) * A.v, 0.0)};
  for (int i = 0; i < A.u; ++i) {
    for (int j = 0; j < A.v; ++j) {
      double s = 0.0;
      for (int k = 0; k < A.n; ++k) s += w.alpha[static_cast<std::size_t>(k)] * A.at(k, i, j);
      cam.values[static_cast<std::size_t>(i) * A.v + j] = std::max(0.0, s);
    }
  }
  return cam;
}

ProjectionImage cam_overlay(const CamMap& cam, int target_w, int target_h) {
  if (target_w <= 0 || target_h <= 0) fail(ErrorCode::InvalidArgument, "overlay size must be positive");
  if (cam.u <= 0 || cam.v <= 0) fail(ErrorCode::InvalidArgument, "empty activation map");
  auto map = [](int dst, int n_in, int n_out) {
    return n_out == 1 ? 0.0 : static_cast<double>(dst) * (n_in - 1) / (n_out - 1);
  };
  std::vector<double> up(static_cast<std::size_t>(target_w) * target_h);
  for (int y = 0; y < target_h; ++y) {
    const double si = map(y, cam.u, target_h);
    const int i0 = static_cast<int>(std::floor(si)), i1 = std::min(i0 + 1, cam.u - 1);
    const double fi = si - i0;
    for (int x = 0; x < target_w; ++x) {
      const double sj = map(x, cam.v, target_w);
      const int j0 = static_cast<int>(std::floor(sj)), j1 = std::min(j0 + 1, cam.v - 1);
      const double fj = sj - j0;
      const double top = cam.at(i0, j0) * (1 - fj) + cam.at(i0, j1) * fj;
      const double bottom = cam.at(i1, j0) * (1 - fj) + cam.at(i1, j1) * fj;
      up[static_cast<std::size_t>(y) * target_w + x] = top * (1 - fi) + bottom * fi;
    }
  }
  const auto [lo, hi] = std::minmax_element(up.begin(), up.end());
  const double min = *lo, span = *hi - *lo;
  ProjectionImage out(target_w, target_h, 1);
  for (std::size_t p = 0; p < up.size(); ++p)
    out.samples[p] = span > 0 ? static_cast<float>((up[p] - min) / span) : 0.0f;
  out.provenance.normalized = true;
  out.provenance.norm_min = {static_cast<float>(min)};
  out.provenance.norm_max = {static_cast<float>(*hi)};
  return out;
}

MicroCnn MicroCnn::random(std::uint64_t seed) {
  MicroCnn net;
  net.seed = seed;
  Xorshift64Star rng(seed);
  auto fill = [&](std::vector<double>& t, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : t) x = rng.uniform(-bound, bound);
  };
  fill(net.conv1_w, kInChannels * 9);
  fill(net.conv1_b, kInChannels * 9);
  fill(net.conv2_w, kConv1Out * 9);
  fill(net.conv2_b, kConv1Out * 9);
  fill(net.dense_w, kConv2Out);
  fill(net.dense_b, kConv2Out);
  return net;
}

MicroCnn MicroCnn::zeros() { return MicroCnn{}; }

CnnInput CnnInput::from_image(const ProjectionImage& img) {
  if (img.channels != 3) fail(ErrorCode::InvalidArgument, "network input must have 3 channels");
  CnnInput in{img.height, img.width, std::vector<double>(static_cast<std::size_t>(3) * img.height * img.width)};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        in.planes[(static_cast<std::size_t>(c) * img.height + y) * img.width + x] = img.at(x, y, c);
  return in;
}

namespace {

// 3x3 convolution, stride 1, zero padding 1.
MapStack conv3x3(const MapStack& in, const std::vector<double>& w, const std::vector<double>& b, int out_ch) {
  MapStack out(out_ch, in.u, in.v);
  for (int o = 0; o < out_ch; ++o) {
    for (int i = 0; i < in.u; ++i) {
      for (int j = 0; j < in.v; ++j) {
        double s = b[static_cast<std::size_t>(o)];
        for (int c = 0; c < in.n; ++c) {
          const double* k = &w[(static_cast<std::size_t>(o) * in.n + c) * 9];
          for (int ky = 0; ky < 3; ++ky) {
            const int y = i + ky - 1;
            if (y < 0 || y >= in.u) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int x = j + kx - 1;
              if (x < 0 || x >= in.v) continue;
              s += k[ky * 3 + kx] * in.at(c, y, x);
            }
          }
        }
        out.at(o, i, j) = s;
      }
    }
  }
  return out;
}

MapStack relu(const MapStack& m) {
  MapStack out = m;
  for (double& x : out.data) x = std::max(0.0, x);
  return out;
}

std::array<double, 2> softmax(const std::array<double, 2>& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

}  // namespace

std::array<double, 2> logits_from_features(const MicroCnn& net, const FeatureMaps& a) {
  const MapStack& A = a.maps;
  if (A.n != MicroCnn::kConv2Out) fail(ErrorCode::DimMismatch, "feature map count must be 16");
  std::array<double, 2> z{net.dense_b[0], net.dense_b[1]};
  const double area = static_cast<double>(A.u) * A.v;
  for (int k = 0; k < A.n; ++k) {
    double s = 0.0;
    for (int i = 0; i < A.u; ++i)
      for (int j = 0; j < A.v; ++j) s += A.at(k, i, j);
    const double pooled = s / area;
    for (int c = 0; c < 2; ++c) z[static_cast<std::size_t>(c)] += net.dense(c, k) * pooled;
  }
  return z;
}

ForwardCache forward(const MicroCnn& net, const CnnInput& input) {
  if (input.height <= 0 || input.width <= 0 ||
      input.planes.size() != static_cast<std::size_t>(3) * input.height * input.width)
    fail(ErrorCode::InvalidArgument, "network input must be a non-empty 3-channel image");
  ForwardCache cache;
  cache.input = input;
  MapStack x(3, input.height, input.width);
  x.data = input.planes;
  cache.conv1_pre = conv3x3(x, net.conv1_w, net.conv1_b, MicroCnn::kConv1Out);
  cache.conv1_out = relu(cache.conv1_pre);
  cache.conv2_pre = conv3x3(cache.conv1_out, net.conv2_w, net.conv2_b, MicroCnn::kConv2Out);
  cache.features.maps = relu(cache.conv2_pre);

  const MapStack& A = cache.features.maps;
  const double area = static_cast<double>(A.u) * A.v;
  for (int k = 0; k < A.n; ++k) {
    double s = 0.0;
    for (int i = 0; i < A.u; ++i)
      for (int j = 0; j < A.v; ++j) s += A.at(k, i, j);
    cache.pooled[static_cast<std::size_t>(k)] = s / area;
  }
  for (int c = 0; c < 2; ++c) {
    double z = net.dense_b[static_cast<std::size_t>(c)];
    for (int k = 0; k < MicroCnn::kConv2Out; ++k) z += net.dense(c, k) * cache.pooled[static_cast<std::size_t>(k)];
    cache.logits[static_cast<std::size_t>(c)] = z;
  }
  cache.probabilities = softmax(cache.logits);
  return cache;
}

ForwardCache forward(const MicroCnn& net, const ProjectionImage& img) { return forward(net, CnnInput::from_image(img)); }

ClassGradients backward_to_features(const MicroCnn& net, const ForwardCache& cache, int class_index, ScoreKind score) {
  if (class_index != 0 && class_index != 1) fail(ErrorCode::InvalidArgument, "class index must be 0 or 1");
  const MapStack& A = cache.features.maps;
  if (A.n != MicroCnn::kConv2Out || A.u <= 0 || A.v <= 0) fail(ErrorCode::InvalidArgument, "cache has no feature maps");

  // d score / d logit_j
  std::array<double, 2> dz{0.0, 0.0};
  if (score == ScoreKind::Logit) {
    dz[static_cast<std::size_t>(class_index)] = 1.0;
  } else {
    const auto& p = cache.probabilities;
    const double pc = p[static_cast<std::size_t>(class_index)];
    for (int j = 0; j < 2; ++j) dz[static_cast<std::size_t>(j)] = pc * ((j == class_index ? 1.0 : 0.0) - p[static_cast<std::size_t>(j)]);
  }

  // logit_j = b_j + sum_k W[j][k] * mean(A^k): every A^k_{i,j} receives dpooled_k / (u v).
  const double area = static_cast<double>(A.u) * A.v;
  ClassGradients g{MapStack(A.n, A.u, A.v), class_index};
  for (int k = 0; k < A.n; ++k) {
    const double dpooled = dz[0] * net.dense(0, k) + dz[1] * net.dense(1, k);
    const double per_cell = dpooled / area;
    for (int i = 0; i < A.u; ++i)
      for (int j = 0; j < A.v; ++j) g.maps.at(k, i, j) = per_cell;
  }
  return g;
}

namespace {

struct TensorRef {
  const char* name;
  std::vector<int> shape;
  std::vector<double> MicroCnn::*member;
};

std::vector<TensorRef> tensor_layout() {
  return {
      {"conv1.weight", {MicroCnn::kConv1Out, MicroCnn::kInChannels, 3, 3}, &MicroCnn::conv1_w},
      {"conv1.bias", {MicroCnn::kConv1Out}, &MicroCnn::conv1_b},
      {"conv2.weight", {MicroCnn::kConv2Out, MicroCnn::kConv1Out, 3, 3}, &MicroCnn::conv2_w},
      {"conv2.bias", {MicroCnn::kConv2Out}, &MicroCnn::conv2_b},
      {"dense.weight", {MicroCnn::kClasses, MicroCnn::kConv2Out}, &MicroCnn::dense_w},
      {"dense.bias", {MicroCnn::kClasses}, &MicroCnn::dense_b},
  };
}

constexpr const char* kWeightFormat = "microcnn-v1";

}  // namespace

void save_weights(const std::filesystem::path& json_path, const std::filesystem::path& bin_path, const MicroCnn& net) {
  json manifest{{"format", kWeightFormat}, {"dtype", "f64le"}, {"seed", net.seed}, {"tensors", json::array()}};
  std::vector<double> blob;
  for (const auto& t : tensor_layout()) {
    const auto& values = net.*(t.member);
    manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", blob.size() * sizeof(double)}});
    blob.insert(blob.end(), values.begin(), values.end());
  }
  detail::write_file(bin_path, blob.data(), blob.size() * sizeof(double));
  detail::write_json(json_path, manifest);
}

MicroCnn load_weights(const std::filesystem::path& json_path, const std::filesystem::path& bin_path) {
  const json manifest = detail::read_json(json_path);
  MicroCnn net;
  std::size_t total = 0;
  for (const auto& t : tensor_layout()) total += (net.*(t.member)).size();
  const auto blob = detail::decode_raw<double>(detail::read_file(bin_path), total, bin_path);
  try {
    if (manifest.at("format").get<std::string>() != kWeightFormat) fail(ErrorCode::Parse, "unknown weight format");
    net.seed = manifest.value("seed", std::uint64_t{0});
    const auto& tensors = manifest.at("tensors");
    const auto layout = tensor_layout();
    if (tensors.size() != layout.size()) fail(ErrorCode::Parse, "weight manifest must list 6 tensors");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& entry = tensors[i];
      if (entry.at("name").get<std::string>() != layout[i].name ||
          entry.at("shape").get<std::vector<int>>() != layout[i].shape)
        fail(ErrorCode::Parse, std::string("tensor ") + layout[i].name + " does not match the architecture");
      auto& dst = net.*(layout[i].member);
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (offset % sizeof(double) != 0 || offset / sizeof(double) + dst.size() > blob.size())
        fail(ErrorCode::Parse, std::string("tensor ") + layout[i].name + " offset out of range");
      std::copy_n(blob.begin() + static_cast<std::ptrdiff_t>(offset / sizeof(double)), dst.size(), dst.begin());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, json_path.string() + ": " + e.what());
  }
  return net;
}

}  // namespace ctproj
