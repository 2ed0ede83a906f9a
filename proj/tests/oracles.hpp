#pragma once

// Straightforward reference implementations used to cross-check the library.
// Deliberately naive: direct DFT sums, per-pixel loops, two-pass statistics.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hsdeg/cube.hpp"

namespace oracle {

using hsdeg::HsiCube;

inline std::vector<std::complex<double>> naive_dft(const HsiCube& c, std::size_t b) {
  const std::size_t h = c.height(), w = c.width();
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<double> acc = 0.0;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double ph = -2.0 * std::numbers::pi *
                            (static_cast<double>(u * y) / static_cast<double>(h) +
                             static_cast<double>(v * x) / static_cast<double>(w));
          acc += c.at(b, y, x) * std::polar(1.0, ph);
        }
      }
      out[u * w + v] = acc;
    }
  }
  return out;
}

inline double signed_freq(std::size_t k, std::size_t n) {
  const double f = static_cast<double>(k) / static_cast<double>(n);
  return f > 0.5 ? f - 1.0 : f;
}

inline double hfer(const HsiCube& c) {
  double sum = 0.0;
  for (std::size_t b = 0; b < c.bands(); ++b) {
    const auto F = naive_dft(c, b);
    double hi = 0.0, total = 0.0;
    for (std::size_t u = 0; u < c.height(); ++u) {
      for (std::size_t v = 0; v < c.width(); ++v) {
        const double e = std::norm(F[u * c.width() + v]);
        total += e;
        if (std::hypot(signed_freq(u, c.height()), signed_freq(v, c.width())) >= 0.25) hi += e;
      }
    }
    sum += total > 0.0 ? hi / total : 0.0;
  }
  return sum / static_cast<double>(c.bands());
}

inline double stu(const HsiCube& c) {
  double sum = 0.0;
  for (std::size_t b = 0; b < c.bands(); ++b) {
    const auto F = naive_dft(c, b);
    double logs = 0.0, mags = 0.0;
    for (const auto& z : F) {
      const double m = std::max(std::abs(z), 1e-12);
      logs += std::log(m);
      mags += m;
    }
    const double n = static_cast<double>(F.size());
    sum += std::exp(logs / n) / (mags / n);
  }
  return sum / static_cast<double>(c.bands());
}

inline double gsd(const HsiCube& c) {
  const std::size_t h = c.height(), w = c.width();
  double sum = 0.0;
  for (std::size_t b = 0; b < c.bands(); ++b) {
    std::vector<double> mags;
    for (std::size_t y = 1; y + 1 < h; ++y) {
      for (std::size_t x = 1; x + 1 < w; ++x) {
        const double dx = (c.at(b, y, x + 1) - c.at(b, y, x - 1)) / 2.0;
        const double dy = (c.at(b, y + 1, x) - c.at(b, y - 1, x)) / 2.0;
        mags.push_back(std::sqrt(dx * dx + dy * dy));
      }
    }
    double mean = 0.0;
    for (double m : mags) mean += m;
    mean /= static_cast<double>(mags.size());
    double ss = 0.0;
    for (double m : mags) ss += (m - mean) * (m - mean);
    sum += std::sqrt(ss / static_cast<double>(mags.size() - 1));
  }
  return sum / static_cast<double>(c.bands());
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b, bool& degenerate) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  degenerate = saa == 0.0 || sbb == 0.0;
  return degenerate ? 0.0 : sab / std::sqrt(saa * sbb);
}

inline double scc(const HsiCube& c) {
  const std::size_t h = c.height(), w = c.width();
  double sum = 0.0;
  for (std::size_t b = 0; b < c.bands(); ++b) {
    std::vector<double> l, r, t, d;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x + 1 < w; ++x) {
        l.push_back(c.at(b, y, x));
        r.push_back(c.at(b, y, x + 1));
      }
    }
    for (std::size_t y = 0; y + 1 < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        t.push_back(c.at(b, y, x));
        d.push_back(c.at(b, y + 1, x));
      }
    }
    bool dh = false, dv = false;
    const double ch = pearson(l, r, dh);
    const double cv = pearson(t, d, dv);
    sum += (dh || dv) ? 1.0 : 0.5 * (ch + cv);
  }
  return sum / static_cast<double>(c.bands());
}

inline double psnr(const HsiCube& a, const HsiCube& b, double peak) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

// Direct 11x11 window sums per output position.
inline double ssim(const HsiCube& a, const HsiCube& b, double peak) {
  constexpr int R = 5;
  double win[11][11];
  double wsum = 0.0;
  for (int i = -R; i <= R; ++i) {
    for (int j = -R; j <= R; ++j) {
      win[i + R][j + R] = std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
      wsum += win[i + R][j + R];
    }
  }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const int h = static_cast<int>(a.height()), w = static_cast<int>(a.width());
  double total = 0.0;
  for (std::size_t band = 0; band < a.bands(); ++band) {
    double acc = 0.0;
    int count = 0;
    for (int y = R; y < h - R; ++y) {
      for (int x = R; x < w - R; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = -R; i <= R; ++i) {
          for (int j = -R; j <= R; ++j) {
            const double g = win[i + R][j + R] / wsum;
            const double p = a.at(band, y + i, x + j), q = b.at(band, y + i, x + j);
            mx += g * p;
            my += g * q;
            sxx += g * p * p;
            syy += g * q * q;
            sxy += g * p * q;
          }
        }
        const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
    total += acc / count;
  }
  return total / static_cast<double>(a.bands());
}

inline double effective_rank(const HsiCube& c) {
  Eigen::MatrixXd m(c.bands(), c.plane_size());
  for (std::size_t b = 0; b < c.bands(); ++b) {
    for (std::size_t p = 0; p < c.plane_size(); ++p) m(b, p) = c.band(b)[p];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto s = svd.singularValues();
  const double total = s.sum();
  double h = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double p = s(i) / total;
    if (p > 0) h -= p * std::log(p);
  }
  return std::exp(h);
}

inline HsiCube random_cube(std::size_t h, std::size_t w, std::size_t b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> data(h * w * b);
  for (auto& v : data) v = u(rng);
  return HsiCube(h, w, b, std::move(data));
}

inline HsiCube gaussian_cube(std::size_t h, std::size_t w, std::size_t b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> data(h * w * b);
  for (auto& v : data) v = n(rng);
  return HsiCube(h, w, b, std::move(data), {-5.0, 5.0});
}

}  // namespace oracle
