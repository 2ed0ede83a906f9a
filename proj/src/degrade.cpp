#include "hsdeg/degrade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "hsdeg/convolve.hpp"
#include "hsdeg/errors.hpp"
#include "hsdeg/rng.hpp"

namespace hsdeg {
namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "gaussian_noise", "poisson_noise", "gaussian_blur", "motion_blur",
    "super_res",      "inpaint",       "band_drop",
};

// Stream id for the sigma draw of a ranged Gaussian-noise recipe; band
// substreams use ids 0..bands-1.
constexpr std::uint64_t kSigmaStream = ~std::uint64_t{0};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& message) {
  if (!ok) throw ParameterError(message);
}

void require_unit(const HsiCube& cube) {
  for (double v : cube.data()) {
    if (v < 0.0 || v > 1.0) throw DomainError("degradation input must lie in [0,1]");
  }
}

HsiCube clamp_unit(const HsiCube& cube) {
  std::vector<double> out(cube.data().begin(), cube.data().end());
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return cube.with_data(std::move(out));
}

HsiCube convolve_bands(const HsiCube& cube, const std::vector<double>& kernel, std::size_t k) {
  std::vector<double> out;
  out.reserve(cube.size());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto plane = convolve2d_reflect(cube.band(b), cube.height(), cube.width(), kernel, k, k);
    out.insert(out.end(), plane.begin(), plane.end());
  }
  return cube.with_data(std::move(out));
}

double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

// Row i of the (n/scale) x n bicubic resampling matrix, as (index, weight)
// taps with border indices clamped.
std::vector<std::vector<std::pair<std::size_t, double>>> bicubic_taps(std::size_t n, int scale) {
  const std::size_t m = n / static_cast<std::size_t>(scale);
  std::vector<std::vector<std::pair<std::size_t, double>>> taps(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double src = (static_cast<double>(j) + 0.5) * scale - 0.5;
    const auto base = static_cast<long long>(std::floor(src));
    for (long long o = -1; o <= 2; ++o) {
      const long long idx = base + o;
      const double w = catmull_rom(src - static_cast<double>(idx));
      const auto clamped = static_cast<std::size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(n) - 1));
      taps[j].emplace_back(clamped, w);
    }
  }
  return taps;
}

}  // namespace

std::string_view kind_name(DegradationKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

DegradationKind kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<DegradationKind>(i);
  }
  throw ParseError("unknown degradation kind \"" + std::string(name) + "\"");
}

void DegradationRecipe::validate() const {
  std::visit(
      Overloaded{
          [](const GaussianNoiseParams& p) {
            if (p.sigma255_range) {
              const auto [lo, hi] = *p.sigma255_range;
              require(lo > 0.0 && hi <= 255.0 && lo <= hi,
                      "gaussian_noise.sigma255_range must satisfy 0 < lo <= hi <= 255");
            } else {
              require(p.sigma255 > 0.0 && p.sigma255 <= 255.0,
                      "gaussian_noise.sigma255 must be in (0, 255]");
            }
          },
          [](const PoissonNoiseParams& p) {
            require(p.scale > 0.0 && std::isfinite(p.scale), "poisson_noise.scale must be > 0");
          },
          [](const GaussianBlurParams& p) {
            require(p.kernel_size >= 3 && p.kernel_size % 2 == 1,
                    "gaussian_blur.kernel_size must be odd and >= 3");
          },
          [](const MotionBlurParams& p) {
            require(p.radius >= 1, "motion_blur.radius must be >= 1");
            require(p.angle_deg >= 0.0 && p.angle_deg < 360.0,
                    "motion_blur.angle_deg must be in [0, 360)");
          },
          [](const SuperResParams& p) {
            require(p.scale == 2 || p.scale == 4, "super_res.scale must be 2 or 4");
          },
          [](const InpaintParams& p) {
            require(p.mask_rate > 0.0 && p.mask_rate < 1.0, "inpaint.mask_rate must be in (0, 1)");
          },
          [](const BandDropParams& p) {
            require(p.drop_rate > 0.0 && p.drop_rate < 1.0,
                    "band_drop.drop_rate must be in (0, 1)");
          },
      },
      params);
}

double blur_sigma_from_kernel(int kernel_size) {
  require(kernel_size >= 3 && kernel_size % 2 == 1, "kernel_size must be odd and >= 3");
  // 0.3 * m + 0.8 with m = (K - 1) / 2 - 1, written over a common
  // denominator so the numerator is an exact integer and the result is the
  // correctly rounded value (2.6 for K = 15, not 2.5999999999999996).
  const int m = (kernel_size - 1) / 2 - 1;
  return (3.0 * m + 8.0) / 10.0;
}

std::vector<double> gaussian_kernel(int kernel_size) {
  const double sigma = blur_sigma_from_kernel(kernel_size);
  const int r = kernel_size / 2;
  std::vector<double> g(static_cast<std::size_t>(kernel_size));
  for (int i = -r; i <= r; ++i) g[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  std::vector<double> k(g.size() * g.size());
  double total = 0.0;
  for (std::size_t y = 0; y < g.size(); ++y) {
    for (std::size_t x = 0; x < g.size(); ++x) total += (k[y * g.size() + x] = g[y] * g[x]);
  }
  for (double& v : k) v /= total;
  return k;
}

std::vector<double> motion_kernel(int radius, double angle_deg) {
  require(radius >= 1, "motion_blur.radius must be >= 1");
  // A centered line is symmetric under a half turn.
  const double theta = std::fmod(angle_deg, 180.0) * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const std::size_t k = 2 * static_cast<std::size_t>(radius) + 1;
  std::vector<double> kernel(k * k, 0.0);
  for (int step = 0; step <= 4 * radius; ++step) {
    const double t = step / 4.0;
    for (double tt : {t, -t}) {
      const auto dx = static_cast<long long>(std::round(tt * c));
      const auto dy = -static_cast<long long>(std::round(tt * s));
      kernel[static_cast<std::size_t>((dy + radius) * static_cast<long long>(k) + dx + radius)] = 1.0;
    }
  }
  double total = 0.0;
  for (double v : kernel) total += v;
  for (double& v : kernel) v /= total;
  return kernel;
}

HsiCube gaussian_blur(const HsiCube& cube, int kernel_size) {
  const auto k = static_cast<std::size_t>(kernel_size);
  blur_sigma_from_kernel(kernel_size);
  if (k > std::min(cube.height(), cube.width())) {
    throw ParameterError("gaussian_blur.kernel_size " + std::to_string(kernel_size) +
                         " exceeds image size");
  }
  return convolve_bands(cube, gaussian_kernel(kernel_size), k);
}

HsiCube motion_blur(const HsiCube& cube, int radius, double angle_deg) {
  require(radius >= 1, "motion_blur.radius must be >= 1");
  const std::size_t k = 2 * static_cast<std::size_t>(radius) + 1;
  if (k > std::min(cube.height(), cube.width())) {
    throw ParameterError("motion_blur kernel of radius " + std::to_string(radius) +
                         " exceeds image size");
  }
  return convolve_bands(cube, motion_kernel(radius, angle_deg), k);
}

HsiCube super_res_degrade(const HsiCube& cube, int scale) {
  require(scale >= 1, "super_res.scale must be positive");
  const auto s = static_cast<std::size_t>(scale);
  const std::size_t h = cube.height();
  const std::size_t w = cube.width();
  if (h % s != 0 || w % s != 0) {
    throw ParameterError("super_res: image " + std::to_string(h) + "x" + std::to_string(w) +
                         " is not divisible by scale " + std::to_string(scale));
  }
  const std::size_t lh = h / s;
  const std::size_t lw = w / s;
  const auto row_taps = bicubic_taps(h, scale);
  const auto col_taps = bicubic_taps(w, scale);

  std::vector<double> out(cube.size(), 0.0);
  std::vector<double> tmp(h * lw);
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto plane = cube.band(b);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t j = 0; j < lw; ++j) {
        double acc = 0.0;
        for (const auto& [idx, wt] : col_taps[j]) acc += wt * plane[y * w + idx];
        tmp[y * lw + j] = acc;
      }
    }
    double* dst = out.data() + b * h * w;
    for (std::size_t i = 0; i < lh; ++i) {
      for (std::size_t j = 0; j < lw; ++j) {
        double acc = 0.0;
        for (const auto& [idx, wt] : row_taps[i]) acc += wt * tmp[idx * lw + j];
        dst[(i * s) * w + j * s] = acc;
      }
    }
  }
  return cube.with_data(std::move(out));
}

HsiCube poisson_noise(const HsiCube& cube, double scale, std::uint64_t seed) {
  require(scale > 0.0 && std::isfinite(scale), "poisson_noise.scale must be > 0");
  std::vector<double> out(cube.size());
  const std::size_t n = cube.plane_size();
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    Rng rng = make_rng(seed, b);
    const auto plane = cube.band(b);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = plane[i];
      if (x < 0.0) throw DomainError("poisson_noise: negative input value");
      double y = 0.0;
      if (x > 0.0) {
        std::poisson_distribution<long long> dist(x * scale);
        y = static_cast<double>(dist(rng)) / scale;
      }
      out[b * n + i] = y;
    }
  }
  return cube.with_data(std::move(out));
}

HsiCube gaussian_noise(const HsiCube& cube, double sigma255, std::uint64_t seed) {
  require(sigma255 > 0.0 && sigma255 <= 255.0, "gaussian_noise.sigma255 must be in (0, 255]");
  const double sigma = sigma255 / 255.0;
  std::vector<double> out(cube.size());
  const std::size_t n = cube.plane_size();
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    Rng rng = make_rng(seed, b);
    std::normal_distribution<double> normal(0.0, sigma);
    const auto plane = cube.band(b);
    for (std::size_t i = 0; i < n; ++i) out[b * n + i] = plane[i] + normal(rng);
  }
  return cube.with_data(std::move(out));
}

std::pair<HsiCube, DegradationMask> inpaint(const HsiCube& cube, double mask_rate,
                                            std::uint64_t seed) {
  require(mask_rate > 0.0 && mask_rate < 1.0, "inpaint.mask_rate must be in (0, 1)");
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = cube.plane_size();
  DegradationMask mask;
  mask.missing_pixels.resize(n);
  for (auto& m : mask.missing_pixels) m = unit(rng) < mask_rate ? 1 : 0;
  std::vector<double> out(cube.data().begin(), cube.data().end());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      if (mask.missing_pixels[i]) out[b * n + i] = 0.0;
    }
  }
  return {cube.with_data(std::move(out)), std::move(mask)};
}

std::size_t band_drop_count(double drop_rate, std::size_t bands) {
  if (bands < 2) throw DimensionError("band_drop needs at least 2 bands");
  const auto n = static_cast<std::size_t>(std::llround(drop_rate * static_cast<double>(bands)));
  return std::clamp<std::size_t>(n, 1, bands - 1);
}

std::pair<HsiCube, DegradationMask> band_drop(const HsiCube& cube, double drop_rate,
                                              std::uint64_t seed) {
  require(drop_rate > 0.0 && drop_rate < 1.0, "band_drop.drop_rate must be in (0, 1)");
  const std::size_t count = band_drop_count(drop_rate, cube.bands());
  Rng rng = make_rng(seed, 0);
  std::vector<std::size_t> order(cube.bands());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  DegradationMask mask;
  mask.dropped_bands.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(mask.dropped_bands.begin(), mask.dropped_bands.end());
  std::vector<double> out(cube.data().begin(), cube.data().end());
  const std::size_t n = cube.plane_size();
  for (std::size_t b : mask.dropped_bands) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(b * n),
              out.begin() + static_cast<std::ptrdiff_t>((b + 1) * n), 0.0);
  }
  return {cube.with_data(std::move(out)), std::move(mask)};
}

DegradedPair apply(const DegradationRecipe& recipe, const HsiCube& cube) {
  recipe.validate();
  require_unit(cube);
  const std::uint64_t seed = recipe.seed;
  return std::visit(
      Overloaded{
          [&](const GaussianNoiseParams& p) {
            double sigma255 = p.sigma255;
            if (p.sigma255_range) {
              Rng rng = make_rng(seed, kSigmaStream);
              std::uniform_real_distribution<double> pick(p.sigma255_range->first,
                                                          p.sigma255_range->second);
              sigma255 = pick(rng);
            }
            return DegradedPair{cube, clamp_unit(gaussian_noise(cube, sigma255, seed)), recipe,
                                std::nullopt, sigma255};
          },
          [&](const PoissonNoiseParams& p) {
            return DegradedPair{cube, clamp_unit(poisson_noise(cube, p.scale, seed)), recipe,
                                std::nullopt, std::nullopt};
          },
          [&](const GaussianBlurParams& p) {
            return DegradedPair{cube, clamp_unit(gaussian_blur(cube, p.kernel_size)), recipe,
                                std::nullopt, blur_sigma_from_kernel(p.kernel_size)};
          },
          [&](const MotionBlurParams& p) {
            return DegradedPair{cube, clamp_unit(motion_blur(cube, p.radius, p.angle_deg)), recipe,
                                std::nullopt, std::nullopt};
          },
          [&](const SuperResParams& p) {
            return DegradedPair{cube, clamp_unit(super_res_degrade(cube, p.scale)), recipe,
                                std::nullopt, std::nullopt};
          },
          [&](const InpaintParams& p) {
            auto [out, mask] = inpaint(cube, p.mask_rate, seed);
            return DegradedPair{cube, std::move(out), recipe, std::move(mask), std::nullopt};
          },
          [&](const BandDropParams& p) {
            auto [out, mask] = band_drop(cube, p.drop_rate, seed);
            return DegradedPair{cube, std::move(out), recipe, std::move(mask), std::nullopt};
          },
      },
      recipe.params);
}

namespace {

void reject_unknown_keys(const nlohmann::json& params, std::initializer_list<std::string_view> keys,
                         std::string_view kind) {
  for (const auto& [key, value] : params.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ParseError("recipe.params." + key + ": unknown parameter for kind \"" +
                       std::string(kind) + "\"");
    }
  }
}

template <typename T>
T field(const nlohmann::json& params, const char* key, std::string_view kind) {
  if (!params.contains(key)) {
    throw ParseError("recipe.params." + std::string(key) + ": required for kind \"" +
                     std::string(kind) + "\"");
  }
  const auto& v = params.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) {
      throw ParseError("recipe.params." + std::string(key) + ": expected an integer");
    }
  } else {
    if (!v.is_number()) throw ParseError("recipe.params." + std::string(key) + ": expected a number");
  }
  return v.get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const DegradationRecipe& recipe) {
  nlohmann::json params = nlohmann::json::object();
  std::visit(Overloaded{
                 [&](const GaussianNoiseParams& p) {
                   if (p.sigma255_range) {
                     params["sigma255_range"] = {p.sigma255_range->first, p.sigma255_range->second};
                   } else {
                     params["sigma255"] = p.sigma255;
                   }
                 },
                 [&](const PoissonNoiseParams& p) { params["scale"] = p.scale; },
                 [&](const GaussianBlurParams& p) { params["kernel_size"] = p.kernel_size; },
                 [&](const MotionBlurParams& p) {
                   params["radius"] = p.radius;
                   params["angle_deg"] = p.angle_deg;
                 },
                 [&](const SuperResParams& p) { params["scale"] = p.scale; },
                 [&](const InpaintParams& p) { params["mask_rate"] = p.mask_rate; },
                 [&](const BandDropParams& p) { params["drop_rate"] = p.drop_rate; },
             },
             recipe.params);
  j = nlohmann::json{{"kind", std::string(kind_name(recipe.kind()))}, {"params", params}, {"seed", recipe.seed}};
}

void from_json(const nlohmann::json& j, DegradationRecipe& recipe) {
  if (!j.is_object()) throw ParseError("recipe: expected a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    throw ParseError("recipe.kind: required string");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && key != "params" && key != "seed") {
      throw ParseError("recipe." + key + ": unknown field");
    }
  }
  const auto name = j.at("kind").get<std::string>();
  const DegradationKind kind = kind_from_name(name);
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) throw ParseError("recipe.params: expected an object");
  if (j.contains("seed") && !j.at("seed").is_number_unsigned() &&
      !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0)) {
    throw ParseError("recipe.seed: expected a non-negative integer");
  }
  recipe.seed = j.value("seed", std::uint64_t{0});

  switch (kind) {
    case DegradationKind::GaussianNoise: {
      reject_unknown_keys(params, {"sigma255", "sigma255_range"}, name);
      GaussianNoiseParams p;
      if (params.contains("sigma255_range")) {
        const auto& r = params.at("sigma255_range");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
          throw ParseError("recipe.params.sigma255_range: expected [lo, hi]");
        }
        p.sigma255_range = std::make_pair(r[0].get<double>(), r[1].get<double>());
      } else {
        p.sigma255 = field<double>(params, "sigma255", name);
      }
      recipe.params = p;
      break;
    }
    case DegradationKind::PoissonNoise:
      reject_unknown_keys(params, {"scale"}, name);
      recipe.params = PoissonNoiseParams{field<double>(params, "scale", name)};
      break;
    case DegradationKind::GaussianBlur:
      reject_unknown_keys(params, {"kernel_size"}, name);
      recipe.params = GaussianBlurParams{field<int>(params, "kernel_size", name)};
      break;
    case DegradationKind::MotionBlur:
      reject_unknown_keys(params, {"radius", "angle_deg"}, name);
      recipe.params = MotionBlurParams{field<int>(params, "radius", name),
                                       field<double>(params, "angle_deg", name)};
      break;
    case DegradationKind::SuperRes:
      reject_unknown_keys(params, {"scale"}, name);
      recipe.params = SuperResParams{field<int>(params, "scale", name)};
      break;
    case DegradationKind::Inpaint:
      reject_unknown_keys(params, {"mask_rate"}, name);
      recipe.params = InpaintParams{field<double>(params, "mask_rate", name)};
      break;
    case DegradationKind::BandDrop:
      reject_unknown_keys(params, {"drop_rate"}, name);
      recipe.params = BandDropParams{field<double>(params, "drop_rate", name)};
      break;
  }
  recipe.validate();
}

}  // namespace hsdeg
