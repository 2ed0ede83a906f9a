#include "hsdeg/route.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsdeg/convolve.hpp"
#include "hsdeg/errors.hpp"
#include "hsdeg/rng.hpp"

namespace hsdeg {

FeatureTensor::FeatureTensor(std::size_t c, std::size_t h, std::size_t w, double fill)
    : channels(c), height(h), width(w), data(c * h * w, fill) {}

FeatureTensor::FeatureTensor(std::size_t c, std::size_t h, std::size_t w, std::vector<double> values)
    : channels(c), height(h), width(w), data(std::move(values)) {
  if (data.size() != c * h * w) throw ShapeError("feature tensor payload does not match its shape");
}

FeatureTensor FeatureTensor::from_cube(const HsiCube& cube) {
  return FeatureTensor(cube.bands(), cube.height(), cube.width(),
                       std::vector<double>(cube.data().begin(), cube.data().end()));
}

double dot(const FeatureTensor& a, const FeatureTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("dot: tensor shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

std::vector<double> Matrix::apply(const std::vector<double>& x) const {
  if (x.size() != cols) {
    throw ShapeError("matrix of " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " applied to a vector of length " + std::to_string(x.size()));
  }
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += values[r * cols + c] * x[c];
    y[r] = acc;
  }
  return y;
}

Matrix Matrix::seeded(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(cols, 1))));
  Matrix m{rows, cols, std::vector<double>(rows * cols)};
  for (double& v : m.values) v = normal(rng);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) m.values[i * n + i] = 1.0;
  return m;
}

void RouterConfig::validate() const {
  if (n_experts == 0) throw ParameterError("router.n_experts must be >= 1");
  if (top_k == 0 || top_k > n_experts) throw ParameterError("router.top_k must be in [1, n_experts]");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ParameterError("router.noise_std must be >= 0");
  }
  if (embed_dim == 0) throw ParameterError("router.embed_dim must be >= 1");
  if (embed_weights.rows != embed_dim || embed_weights.cols != 6 ||
      embed_weights.values.size() != embed_dim * 6) {
    throw ShapeError("router.embed_weights must be embed_dim x 6");
  }
  if (proj_weights.rows != n_experts || proj_weights.cols <= embed_dim ||
      proj_weights.values.size() != proj_weights.rows * proj_weights.cols) {
    throw ShapeError("router.proj_weights must be n_experts x (feature dim + embed_dim)");
  }
}

RouterConfig RouterConfig::seeded(std::size_t feature_channels, std::uint64_t seed,
                                  std::size_t n_experts, std::size_t top_k, std::size_t embed_dim) {
  RouterConfig c;
  c.n_experts = n_experts;
  c.top_k = top_k;
  c.embed_dim = embed_dim;
  c.embed_weights = Matrix::seeded(embed_dim, 6, derive_seed(seed, 1));
  c.proj_weights = Matrix::seeded(n_experts, feature_channels + embed_dim, derive_seed(seed, 2));
  return c;
}

std::vector<double> embed_prompt(const DegradationPrompt& dp, const RouterConfig& config) {
  const auto v = dp.values();
  return config.embed_weights.apply(std::vector<double>(v.begin(), v.end()));
}

GateResult gate_from_logits(std::vector<double> logits, const RouterConfig& config, GateMode mode,
                            std::uint64_t seed) {
  if (logits.size() != config.n_experts) {
    throw ShapeError("gate: got " + std::to_string(logits.size()) + " logits for " +
                     std::to_string(config.n_experts) + " experts");
  }
  if (config.top_k == 0 || config.top_k > config.n_experts) {
    throw ParameterError("router.top_k must be in [1, n_experts]");
  }
  if (mode == GateMode::Train && config.noise_std > 0.0) {
    Rng rng = make_rng(seed, 0);
    std::normal_distribution<double> noise(0.0, config.noise_std);
    for (double& l : logits) l += noise(rng);
  }
  GateResult g;
  g.mode = mode;
  const double peak = *std::max_element(logits.begin(), logits.end());
  g.probabilities.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += (g.probabilities[i] = std::exp(logits[i] - peak));
  for (double& p : g.probabilities) p /= total;
  g.logits = std::move(logits);

  std::vector<std::size_t> order(g.probabilities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.probabilities[a] > g.probabilities[b];
  });
  g.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.top_k));
  std::sort(g.selected.begin(), g.selected.end());

  g.gates.assign(g.probabilities.size(), 0.0);
  double kept = 0.0;
  for (std::size_t i : g.selected) kept += (g.gates[i] = g.probabilities[i]);
  if (config.renormalize_gates) {
    for (std::size_t i : g.selected) g.gates[i] /= kept;
  }
  return g;
}

GateResult gate(const FeatureTensor& features, const std::vector<double>& dp_embedding,
                const RouterConfig& config, GateMode mode, std::uint64_t seed) {
  config.validate();
  if (dp_embedding.size() != config.embed_dim) {
    throw ShapeError("gate: embedding has length " + std::to_string(dp_embedding.size()) +
                     ", expected " + std::to_string(config.embed_dim));
  }
  if (features.channels + config.embed_dim != config.proj_weights.cols) {
    throw ShapeError("gate: features have " + std::to_string(features.channels) +
                     " channels but proj_weights expects " +
                     std::to_string(config.proj_weights.cols - config.embed_dim));
  }
  std::vector<double> joint;
  joint.reserve(config.proj_weights.cols);
  const std::size_t n = features.plane_size();
  for (std::size_t c = 0; c < features.channels; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += features.data[c * n + i];
    joint.push_back(acc / static_cast<double>(n));
  }
  joint.insert(joint.end(), dp_embedding.begin(), dp_embedding.end());
  return gate_from_logits(config.proj_weights.apply(joint), config, mode, seed);
}

FeatureTensor mix_experts(const std::vector<FeatureTensor>& expert_outputs, const GateResult& gate) {
  if (gate.selected.empty()) throw ShapeError("mix_experts: gate selects no expert");
  for (std::size_t i : gate.selected) {
    if (i >= expert_outputs.size()) {
      throw ShapeError("mix_experts: selected expert " + std::to_string(i) + " has no output");
    }
  }
  const auto& ref = expert_outputs[gate.selected.front()];
  FeatureTensor out(ref.channels, ref.height, ref.width, 0.0);
  for (std::size_t i : gate.selected) {
    const auto& f = expert_outputs[i];
    if (!f.same_shape(ref)) throw ShapeError("mix_experts: expert output shapes differ");
    const double g = gate.gates.at(i);
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += g * f.data[j];
  }
  return out;
}

FeatureTensor fuse(const FeatureTensor& shared, const FeatureTensor& deg, const Matrix& fuse_weights) {
  if (!shared.same_shape(deg)) throw ShapeError("fuse: shared and degradation features differ in shape");
  const std::size_t c = shared.channels;
  if (fuse_weights.rows != c || fuse_weights.cols != 2 * c) {
    throw ShapeError("fuse: weights must be C x 2C with C = " + std::to_string(c));
  }
  const std::size_t n = shared.plane_size();
  FeatureTensor out(c, shared.height, shared.width, 0.0);
  for (std::size_t o = 0; o < c; ++o) {
    for (std::size_t i = 0; i < 2 * c; ++i) {
      const double w = fuse_weights.values[o * 2 * c + i];
      if (w == 0.0) continue;
      const double* src = i < c ? shared.data.data() + i * n : deg.data.data() + (i - c) * n;
      double* dst = out.data.data() + o * n;
      for (std::size_t p = 0; p < n; ++p) dst[p] += w * src[p];
    }
  }
  return out;
}

double SsamParams::lambda_spatial() const {
  if (alpha >= 0.0) return 1.0 / (1.0 + std::exp(-alpha));
  const double e = std::exp(alpha);
  return e / (1.0 + e);
}

SsamParams SsamParams::identity(std::size_t channels, double alpha) {
  SsamParams p;
  p.alpha = alpha;
  p.spatial_kernels.assign(channels * 9, 0.0);
  for (std::size_t c = 0; c < channels; ++c) p.spatial_kernels[c * 9 + 4] = 1.0;
  p.spectral_kernel = {0.0, 1.0, 0.0};
  return p;
}

SsamParams SsamParams::seeded(std::size_t channels, std::uint64_t seed, double alpha) {
  Rng rng = make_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0 / 3.0);
  SsamParams p;
  p.alpha = alpha;
  p.spatial_kernels.resize(channels * 9);
  for (double& v : p.spatial_kernels) v = normal(rng);
  for (double& v : p.spectral_kernel) v = normal(rng);
  return p;
}

namespace {

void check_ssam(const FeatureTensor& f, const SsamParams& params) {
  if (f.channels < 3 || f.height < 3 || f.width < 3) {
    throw DimensionError("ssam: features must be at least 3 x 3 x 3 for the 3-tap extractors");
  }
  if (f.data.size() != f.channels * f.plane_size()) throw ShapeError("ssam: malformed feature tensor");
  if (params.spatial_kernels.size() != 9 * f.channels) {
    throw ShapeError("ssam: spatial_kernels must hold 9 weights per channel");
  }
  if (params.spectral_kernel.size() != 3) throw ShapeError("ssam: spectral_kernel must have 3 taps");
}

}  // namespace

FeatureTensor ssam_spatial(const FeatureTensor& f, const SsamParams& params) {
  check_ssam(f, params);
  const std::size_t n = f.plane_size();
  FeatureTensor out(f.channels, f.height, f.width, 0.0);
  for (std::size_t c = 0; c < f.channels; ++c) {
    const auto plane = convolve2d_reflect(std::span(f.data).subspan(c * n, n), f.height, f.width,
                                          std::span(params.spatial_kernels).subspan(c * 9, 9), 3, 3);
    std::copy(plane.begin(), plane.end(), out.data.begin() + static_cast<std::ptrdiff_t>(c * n));
  }
  return out;
}

FeatureTensor ssam_spectral(const FeatureTensor& f, const SsamParams& params) {
  check_ssam(f, params);
  const std::size_t n = f.plane_size();
  FeatureTensor out(f.channels, f.height, f.width, 0.0);
  for (std::size_t c = 0; c < f.channels; ++c) {
    for (long long o = -1; o <= 1; ++o) {
      const double k = params.spectral_kernel[static_cast<std::size_t>(o + 1)];
      const std::size_t src = reflect_index(static_cast<long long>(c) - o, f.channels);
      for (std::size_t p = 0; p < n; ++p) out.data[c * n + p] += k * f.data[src * n + p];
    }
  }
  return out;
}

FeatureTensor ssam_forward(const FeatureTensor& f, const SsamParams& params) {
  const auto spatial = ssam_spatial(f, params);
  const auto spectral = ssam_spectral(f, params);
  const double ls = params.lambda_spatial();
  const double lc = params.lambda_spectral();
  FeatureTensor out(f.channels, f.height, f.width, 0.0);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = ls * spatial.data[i] + lc * spectral.data[i];
  }
  return out;
}

double ssam_alpha_gradient(const FeatureTensor& f, const SsamParams& params,
                           const FeatureTensor& cotangent) {
  const auto spatial = ssam_spatial(f, params);
  const auto spectral = ssam_spectral(f, params);
  if (!cotangent.same_shape(f)) throw ShapeError("ssam_alpha_gradient: cotangent shape differs");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    acc += cotangent.data[i] * (spatial.data[i] - spectral.data[i]);
  }
  return params.lambda_spatial() * params.lambda_spectral() * acc;
}

LoadBalanceReport load_balance_report(const std::vector<GateResult>& results, std::size_t n_experts) {
  if (results.empty()) throw SampleSizeError("load_balance_report: no gate results");
  LoadBalanceReport r;
  r.frequencies.assign(n_experts, 0.0);
  double total = 0.0;
  for (const auto& g : results) {
    for (std::size_t i : g.selected) {
      if (i >= n_experts) throw ShapeError("load_balance_report: expert index out of range");
      r.frequencies[i] += 1.0;
      total += 1.0;
    }
  }
  for (double& f : r.frequencies) {
    f /= total;
    if (f > 0.0) r.entropy -= f * std::log(f);
  }
  return r;
}

nlohmann::json bundle_to_json(const WeightBundle& bundle) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : bundle) j[name] = {{"shape", t.shape}, {"values", t.values}};
  return j;
}

WeightBundle bundle_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("weights: expected a JSON object of named tensors");
  WeightBundle bundle;
  for (const auto& [name, t] : j.items()) {
    WeightTensor w;
    try {
      w.shape = t.at("shape").get<std::vector<std::size_t>>();
      w.values = t.at("values").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError("weights." + name + ": expected {\"shape\": [...], \"values\": [...]}");
    }
    std::size_t count = 1;
    for (std::size_t s : w.shape) count *= s;
    if (w.shape.empty() || count != w.values.size()) {
      throw ParseError("weights." + name + ": shape does not match the number of values");
    }
    for (double v : w.values) {
      if (!std::isfinite(v)) throw ParseError("weights." + name + ": non-finite value");
    }
    bundle.emplace(name, std::move(w));
  }
  return bundle;
}

WeightBundle router_bundle(const RouterConfig& config) {
  WeightBundle b;
  b["embed_weights"] = {{config.embed_weights.rows, config.embed_weights.cols},
                        config.embed_weights.values};
  b["proj_weights"] = {{config.proj_weights.rows, config.proj_weights.cols},
                       config.proj_weights.values};
  return b;
}

RouterConfig router_from_bundle(const WeightBundle& bundle, std::size_t top_k, double noise_std,
                                bool renormalize_gates) {
  auto matrix = [&](const char* name) {
    const auto it = bundle.find(name);
    if (it == bundle.end()) throw ParseError(std::string("weights.") + name + ": missing tensor");
    if (it->second.shape.size() != 2) throw ParseError(std::string("weights.") + name + ": expected a 2-D shape");
    return Matrix{it->second.shape[0], it->second.shape[1], it->second.values};
  };
  RouterConfig c;
  c.embed_weights = matrix("embed_weights");
  c.proj_weights = matrix("proj_weights");
  c.embed_dim = c.embed_weights.rows;
  c.n_experts = c.proj_weights.rows;
  c.top_k = top_k;
  c.noise_std = noise_std;
  c.renormalize_gates = renormalize_gates;
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const GateResult& g) {
  j = nlohmann::json{{"logits", g.logits},
                     {"probabilities", g.probabilities},
                     {"gates", g.gates},
                     {"selected", g.selected},
                     {"mode", g.mode == GateMode::Train ? "train" : "infer"}};
}

}  // namespace hsdeg
