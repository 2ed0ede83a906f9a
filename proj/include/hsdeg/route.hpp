#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsdeg/cube.hpp"
#include "hsdeg/metrics.hpp"

namespace hsdeg {

/// Channels x height x width feature map, channel planes row-major
/// (the same layout as HsiCube, without the value-range contract).
struct FeatureTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FeatureTensor() = default;
  FeatureTensor(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0);
  FeatureTensor(std::size_t c, std::size_t h, std::size_t w, std::vector<double> values);
  static FeatureTensor from_cube(const HsiCube& cube);

  std::size_t plane_size() const noexcept { return height * width; }
  bool same_shape(const FeatureTensor& o) const noexcept {
    return channels == o.channels && height == o.height && width == o.width;
  }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

double dot(const FeatureTensor& a, const FeatureTensor& b);

/// Dense row-major matrix used for the router's linear maps.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::vector<double> apply(const std::vector<double>& x) const;
  /// N(0, 1/cols) entries from the seed.
  static Matrix seeded(std::size_t rows, std::size_t cols, std::uint64_t seed);
  static Matrix identity(std::size_t n);
};

struct RouterConfig {
  std::size_t n_experts = 4;
  std::size_t top_k = 1;
  /// Standard deviation of the logit noise; applied in train mode only.
  double noise_std = 0.01;
  /// Rescale kept gates to sum 1 after top-k. Off by default.
  bool renormalize_gates = false;
  std::size_t embed_dim = 64;
  /// n_experts x (pooled feature dim + embed_dim).
  Matrix proj_weights;
  /// embed_dim x 6.
  Matrix embed_weights;

  void validate() const;
  /// Seeded embed/proj weights for `feature_channels` pooled inputs.
  static RouterConfig seeded(std::size_t feature_channels, std::uint64_t seed,
                             std::size_t n_experts = 4, std::size_t top_k = 1,
                             std::size_t embed_dim = 64);
};

enum class GateMode { Train, Infer };

struct GateResult {
  /// Logits fed to the softmax (noise included in train mode).
  std::vector<double> logits;
  /// Softmax before sparsification; sums to 1.
  std::vector<double> probabilities;
  /// Probabilities with all but the top_k zeroed (optionally renormalized).
  std::vector<double> gates;
  /// Indices of the nonzero gates, ascending.
  std::vector<std::size_t> selected;
  GateMode mode = GateMode::Infer;
};

/// Linear, bias-free embedding of the six-metric prompt.
std::vector<double> embed_prompt(const DegradationPrompt& dp, const RouterConfig& config);

/// Softmax, top-k (ties to the lowest index) and optional renormalization.
/// In train mode, N(0, noise_std^2) noise seeded by `seed` is added to the
/// logits first.
GateResult gate_from_logits(std::vector<double> logits, const RouterConfig& config, GateMode mode,
                            std::uint64_t seed);

/// Spatially global-average-pooled features concatenated with the prompt
/// embedding, projected to expert logits, then gated.
GateResult gate(const FeatureTensor& features, const std::vector<double>& dp_embedding,
                const RouterConfig& config, GateMode mode, std::uint64_t seed);

/// Sum over selected experts of gate * output.
FeatureTensor mix_experts(const std::vector<FeatureTensor>& expert_outputs, const GateResult& gate);

/// Channel concat of (shared, deg) followed by a 1x1 convolution with a
/// C x 2C weight matrix.
FeatureTensor fuse(const FeatureTensor& shared, const FeatureTensor& deg, const Matrix& fuse_weights);

/// Convex spatial/spectral fusion: sigmoid(alpha) * E_s(F) + (1 - sigmoid(alpha)) * E_c(F).
/// E_s is a per-channel 3x3 convolution, E_c a length-3 convolution along the
/// channel axis; both reflect at the borders.
struct SsamParams {
  double alpha = 0.0;
  /// channels x 9 values (row-major 3x3 per channel).
  std::vector<double> spatial_kernels;
  std::vector<double> spectral_kernel = {0.0, 1.0, 0.0};

  double lambda_spatial() const;
  double lambda_spectral() const { return 1.0 - lambda_spatial(); }
  static SsamParams identity(std::size_t channels, double alpha = 0.0);
  static SsamParams seeded(std::size_t channels, std::uint64_t seed, double alpha = 0.0);
};

FeatureTensor ssam_spatial(const FeatureTensor& f, const SsamParams& params);
FeatureTensor ssam_spectral(const FeatureTensor& f, const SsamParams& params);
FeatureTensor ssam_forward(const FeatureTensor& f, const SsamParams& params);

/// d<cotangent, ssam_forward(F)>/d alpha, computed analytically.
double ssam_alpha_gradient(const FeatureTensor& f, const SsamParams& params,
                           const FeatureTensor& cotangent);

struct LoadBalanceReport {
  std::vector<double> frequencies;
  /// Shannon entropy (nats) of the frequencies.
  double entropy = 0.0;
};
LoadBalanceReport load_balance_report(const std::vector<GateResult>& results, std::size_t n_experts);

/// Named tensors: JSON {name: {"shape": [...], "values": [...]}}, values
/// row-major.
struct WeightTensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};
using WeightBundle = std::map<std::string, WeightTensor>;

nlohmann::json bundle_to_json(const WeightBundle& bundle);
WeightBundle bundle_from_json(const nlohmann::json& j);

/// Stores "embed_weights" and "proj_weights".
WeightBundle router_bundle(const RouterConfig& config);
/// Loads router weights from a bundle; n_experts and embed_dim follow the
/// tensor shapes.
RouterConfig router_from_bundle(const WeightBundle& bundle, std::size_t top_k, double noise_std,
                                bool renormalize_gates);

void to_json(nlohmann::json& j, const GateResult& g);

}  // namespace hsdeg
