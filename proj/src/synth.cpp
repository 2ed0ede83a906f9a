#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "hsdeg/cube.hpp"
#include "hsdeg/errors.hpp"
#include "hsdeg/fft.hpp"
#include "hsdeg/rng.hpp"

namespace hsdeg {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Relative weight of the random field against the unit-power sinusoids.
constexpr double kRandomFieldWeight = 0.7;

std::vector<double> endmember(std::size_t bands, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto c = static_cast<double>(bands);
  std::vector<double> e(bands, 0.1 + 0.1 * unit(rng));
  for (int bump = 0; bump < 3; ++bump) {
    const double center = c * unit(rng);
    const double width = c * (0.15 + 0.20 * unit(rng));
    const double amp = 0.10 + 0.25 * unit(rng);
    for (std::size_t i = 0; i < bands; ++i) {
      const double d = static_cast<double>(i) - center;
      e[i] += amp * std::exp(-d * d / (2.0 * width * width));
    }
  }
  for (double& v : e) v = std::min(v, 0.95);
  return e;
}

// Periodic Gaussian random field with amplitude spectrum 1/(1+|k|^2),
// |k| in cycles/image, scaled to unit standard deviation.
std::vector<double> smooth_random_field(std::size_t h, std::size_t w, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> spectrum(h * w);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      const double re = normal(rng);
      const double im = normal(rng);
      if (u == 0 && v == 0) continue;
      const double ku = folded_frequency(u, h) * static_cast<double>(h);
      const double kv = folded_frequency(v, w) * static_cast<double>(w);
      const double amp = 1.0 / (1.0 + ku * ku + kv * kv);
      spectrum[u * w + v] = {re * amp, im * amp};
    }
  }
  const auto field = ifft2(spectrum, h, w);
  std::vector<double> out(h * w);
  double mean = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) mean += (out[i] = field[i].real());
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& v : out) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return out;
}

// Sinusoidal texture at the requested frequencies plus a smooth random field.
// Wave vectors are rounded to integers so the field tiles the image.
std::vector<double> texture_field(const SynthSpec& spec, Rng& rng) {
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  std::vector<double> z(h * w, 0.0);
  if (spec.texture_freqs.empty()) return z;
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  const double norm = 1.0 / std::sqrt(static_cast<double>(spec.texture_freqs.size()));
  for (double f : spec.texture_freqs) {
    const double theta = angle(rng);
    const double phase = angle(rng);
    double kx = std::round(f * std::cos(theta));
    double ky = std::round(f * std::sin(theta));
    if (kx == 0.0 && ky == 0.0) kx = 1.0;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double arg = kTwoPi * (kx * static_cast<double>(x) / static_cast<double>(w) +
                                     ky * static_cast<double>(y) / static_cast<double>(h));
        z[y * w + x] += norm * std::sin(arg + phase);
      }
    }
  }
  const auto field = smooth_random_field(h, w, rng);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += kRandomFieldWeight * field[i];
  return z;
}

}  // namespace

HsiCube synth_scene(const SynthSpec& spec) {
  if (spec.height == 0 || spec.width == 0 || spec.bands == 0) {
    throw DimensionError("synth_scene: height, width and bands must be positive");
  }
  if (spec.n_materials == 0) throw ParameterError("synth_scene: n_materials must be >= 1");
  for (double f : spec.texture_freqs) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw ParameterError("synth_scene: texture frequencies must be > 0");
    }
  }

  Rng rng = make_rng(spec.seed, 0);
  const std::size_t n_pix = spec.height * spec.width;
  const std::size_t m = spec.n_materials;

  std::vector<std::vector<double>> endmembers;
  endmembers.reserve(m);
  for (std::size_t k = 0; k < m; ++k) endmembers.push_back(endmember(spec.bands, rng));

  // Abundances: softmax over materials of per-material texture fields.
  std::vector<std::vector<double>> abundance;
  abundance.reserve(m);
  for (std::size_t k = 0; k < m; ++k) abundance.push_back(texture_field(spec, rng));
  for (std::size_t p = 0; p < n_pix; ++p) {
    double peak = abundance[0][p];
    for (std::size_t k = 1; k < m; ++k) peak = std::max(peak, abundance[k][p]);
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) total += (abundance[k][p] = std::exp(abundance[k][p] - peak));
    for (std::size_t k = 0; k < m; ++k) abundance[k][p] /= total;
  }

  auto shading = texture_field(spec, rng);
  for (double& s : shading) s = 0.75 + 0.25 * std::tanh(s);

  std::vector<double> data(n_pix * spec.bands);
  for (std::size_t b = 0; b < spec.bands; ++b) {
    for (std::size_t p = 0; p < n_pix; ++p) {
      double v = 0.0;
      for (std::size_t k = 0; k < m; ++k) v += abundance[k][p] * endmembers[k][b];
      data[b * n_pix + p] = std::clamp(shading[p] * v, 0.0, 1.0);
    }
  }
  return HsiCube(spec.height, spec.width, spec.bands, std::move(data));
}

}  // namespace hsdeg
