#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctproj/projection.hpp"

namespace ctproj {

/// n stacked u-by-v maps, index (k, i, j) -> (k * u + i) * v + j.
struct MapStack {
  int n = 0;
  int u = 0;
  int v = 0;
  std::vector<double> data;

  MapStack() = default;
  MapStack(int n_, int u_, int v_, double fill = 0.0)
      : n(n_), u(u_), v(v_), data(static_cast<std::size_t>(n_) * u_ * v_, fill) {}

  double& at(int k, int i, int j) noexcept { return data[(static_cast<std::size_t>(k) * u + i) * v + j]; }
  double at(int k, int i, int j) const noexcept { return data[(static_cast<std::size_t>(k) * u + i) * v + j]; }
  bool same_shape(const MapStack& o) const noexcept { return n == o.n && u == o.u && v == o.v; }
};

/// Activations of the final convolution.
struct FeatureMaps {
  MapStack maps;
};

/// d y^c / d A^k_{i,j} for one class.
struct ClassGradients {
  MapStack maps;
  int class_index = 0;
};

struct AlphaWeights {
  std::vector<double> alpha;
  double z = 1.0;
};

/// Rectified activation map, u rows by v columns.
struct CamMap {
  int u = 0;
  int v = 0;
  std::vector<double> values;

  double at(int i, int j) const noexcept { return values[static_cast<std::size_t>(i) * v + j]; }
};

AlphaWeights alpha_weights(const ClassGradients& g);

/// L = ReLU(sum_k alpha_k A^k), alpha_k = (1 / (u v)) sum_{i,j} G^k_{i,j}.
CamMap gradcam(const FeatureMaps& a, const ClassGradients& g);

/// Bilinear upsample (corner-aligned) to target size, then min-max to [0, 1].
ProjectionImage cam_overlay(const CamMap& cam, int target_w, int target_h);

/// Small fixed network standing in for a pretrained backbone:
///   conv1 3x3, 3 -> 8, pad 1, ReLU
///   conv2 3x3, 8 -> 16, pad 1, ReLU    (feature maps for grad-CAM)
///   global average pool -> 16
///   dense 16 -> 2 logits, softmax
struct MicroCnn {
  static constexpr int kInChannels = 3;
  static constexpr int kConv1Out = 8;
  static constexpr int kConv2Out = 16;
  static constexpr int kClasses = 2;

  // conv weights [out][in][ky][kx], dense [out][in]
  std::vector<double> conv1_w = std::vector<double>(kConv1Out * kInChannels * 9);
  std::vector<double> conv1_b = std::vector<double>(kConv1Out);
  std::vector<double> conv2_w = std::vector<double>(kConv2Out * kConv1Out * 9);
  std::vector<double> conv2_b = std::vector<double>(kConv2Out);
  std::vector<double> dense_w = std::vector<double>(kClasses * kConv2Out);
  std::vector<double> dense_b = std::vector<double>(kClasses);
  std::uint64_t seed = 0;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias,
  /// drawn in file order from Xorshift64Star(seed).
  static MicroCnn random(std::uint64_t seed);
  static MicroCnn zeros();

  double dense(int cls, int k) const noexcept { return dense_w[static_cast<std::size_t>(cls) * kConv2Out + k]; }
};

/// Input image as 3 planes of H x W doubles.
struct CnnInput {
  int height = 0;
  int width = 0;
  std::vector<double> planes;  // [c][y][x]

  static CnnInput from_image(const ProjectionImage& img);
};

struct ForwardCache {
  CnnInput input;
  MapStack conv1_pre, conv1_out;
  MapStack conv2_pre;
  FeatureMaps features;  // conv2 after ReLU
  std::array<double, MicroCnn::kConv2Out> pooled{};
  std::array<double, 2> logits{};
  std::array<double, 2> probabilities{};
};

ForwardCache forward(const MicroCnn& net, const ProjectionImage& img);
ForwardCache forward(const MicroCnn& net, const CnnInput& input);

/// Logits from given feature maps (pool + dense only).
std::array<double, 2> logits_from_features(const MicroCnn& net, const FeatureMaps& a);

enum class ScoreKind { Logit, Softmax };

/// Reverse-mode gradient of y^c (logit by default, softmax probability when
/// requested) with respect to the post-ReLU conv2 activations.
ClassGradients backward_to_features(const MicroCnn& net, const ForwardCache& cache, int class_index,
                                    ScoreKind score = ScoreKind::Logit);

// Weight file: PREFIX.json manifest {"format","seed","tensors":[{name,shape,offset}]}
// and PREFIX.bin with float64 little-endian tensors in the order conv1.weight,
// conv1.bias, conv2.weight, conv2.bias, dense.weight, dense.bias.
void save_weights(const std::filesystem::path& json_path, const std::filesystem::path& bin_path, const MicroCnn& net);
MicroCnn load_weights(const std::filesystem::path& json_path, const std::filesystem::path& bin_path);

}  // namespace ctproj
