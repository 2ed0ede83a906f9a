#include "hsdeg/eval.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "hsdeg/errors.hpp"

namespace hsdeg {
namespace {

constexpr std::size_t kWindow = 11;
constexpr double kWindowSigma = 1.5;

void require_same_shape(const HsiCube& x, const HsiCube& y) {
  if (!x.same_shape(y)) throw DimensionError("quality metrics need cubes of identical dimensions");
}

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
    total += (g[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma)));
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid-mode filtering: (h - 10) x (w - 10) output.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& g) {
  const std::size_t ow = w - kWindow + 1;
  const std::size_t oh = h - kWindow + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * plane[y * w + x + k];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const HsiCube& x, const HsiCube& y, double peak) {
  require_same_shape(x, y);
  if (!(peak > 0.0)) throw ParameterError("psnr: peak must be > 0");
  const auto a = x.data();
  const auto b = y.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sse += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const HsiCube& x, const HsiCube& y, double peak) {
  require_same_shape(x, y);
  if (!(peak > 0.0)) throw ParameterError("ssim: peak must be > 0");
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  if (std::min(h, w) < kWindow) throw DimensionError("ssim: image is smaller than the 11x11 window");
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const auto g = gaussian_window();
  const std::size_t n = h * w;

  double total = 0.0;
  for (std::size_t b = 0; b < x.bands(); ++b) {
    const auto pa = x.band(b);
    const auto pb = y.band(b);
    std::vector<double> a(pa.begin(), pa.end()), bb(pb.begin(), pb.end());
    std::vector<double> aa(n), bsq(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      aa[i] = a[i] * a[i];
      bsq[i] = bb[i] * bb[i];
      ab[i] = a[i] * bb[i];
    }
    const auto mu_a = filter_valid(a, h, w, g);
    const auto mu_b = filter_valid(bb, h, w, g);
    const auto e_aa = filter_valid(aa, h, w, g);
    const auto e_bb = filter_valid(bsq, h, w, g);
    const auto e_ab = filter_valid(ab, h, w, g);
    double band_sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      band_sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                  ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += band_sum / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(x.bands());
}

QualityScore evaluate_quality(const HsiCube& x, const HsiCube& y, double peak) {
  return {psnr(x, y, peak), ssim(x, y, peak)};
}

}  // namespace hsdeg
