#include "hsdeg/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hsdeg/errors.hpp"
#include "hsdeg/fft.hpp"
#include "hsdeg/parallel.hpp"

namespace hsdeg {
namespace {

void require_spatial(const HsiCube& cube, std::size_t min_side, const char* metric) {
  if (std::min(cube.height(), cube.width()) < min_side) {
    throw DimensionError(std::string(metric) + " requires height and width >= " +
                         std::to_string(min_side));
  }
}

template <typename BandFn>
double mean_over_bands(const HsiCube& cube, unsigned threads, BandFn&& fn) {
  std::vector<double> per_band(cube.bands());
  parallel_for(cube.bands(), threads, [&](std::size_t b) { per_band[b] = fn(cube.band(b)); });
  double total = 0.0;
  for (double v : per_band) total += v;
  return total / static_cast<double>(cube.bands());
}

double band_hfer(std::span<const double> plane, std::size_t h, std::size_t w) {
  const auto spectrum = fft2(plane, h, w);
  double high = 0.0;
  double total = 0.0;
  for (std::size_t u = 0; u < h; ++u) {
    const double fu = folded_frequency(u, h);
    for (std::size_t v = 0; v < w; ++v) {
      const double fv = folded_frequency(v, w);
      const double e = std::norm(spectrum[u * w + v]);
      total += e;
      if ((u != 0 || v != 0) && std::sqrt(fu * fu + fv * fv) >= kHighFrequencyCutoff) high += e;
    }
  }
  return total > 0.0 ? high / total : 0.0;
}

double band_stu(std::span<const double> plane, std::size_t h, std::size_t w) {
  const auto spectrum = fft2(plane, h, w);
  double log_sum = 0.0;
  double sum = 0.0;
  for (const auto& c : spectrum) {
    const double m = std::max(std::abs(c), kMagnitudeFloor);
    log_sum += std::log(m);
    sum += m;
  }
  const auto n = static_cast<double>(spectrum.size());
  return std::clamp(std::exp(log_sum / n) / (sum / n), 0.0, 1.0);
}

// Central-difference gradient magnitudes at interior pixels, row-major.
std::vector<double> gradient_magnitudes(std::span<const double> plane, std::size_t h,
                                        std::size_t w) {
  std::vector<double> mags;
  mags.reserve((h - 2) * (w - 2));
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double dx = 0.5 * (plane[y * w + x + 1] - plane[y * w + x - 1]);
      const double dy = 0.5 * (plane[(y + 1) * w + x] - plane[(y - 1) * w + x]);
      mags.push_back(std::sqrt(dx * dx + dy * dy));
    }
  }
  return mags;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct Correlation {
  double r = 0.0;
  bool degenerate = false;
};

// Pearson correlation of a[i] and b[i] for i in [0, n), both accessed
// through index functions.
template <typename A, typename B>
Correlation pearson(std::size_t n, A&& a, B&& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a(i);
    mb += b(i);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a(i) - ma;
    const double db = b(i) - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

double band_scc(std::span<const double> p, std::size_t h, std::size_t w) {
  const std::size_t nh = h * (w - 1);
  const auto horiz = pearson(
      nh, [&](std::size_t i) { return p[(i / (w - 1)) * w + i % (w - 1)]; },
      [&](std::size_t i) { return p[(i / (w - 1)) * w + i % (w - 1) + 1]; });
  const std::size_t nv = (h - 1) * w;
  const auto vert = pearson(
      nv, [&](std::size_t i) { return p[i]; }, [&](std::size_t i) { return p[i + w]; });
  if (horiz.degenerate || vert.degenerate) return 1.0;
  return 0.5 * (horiz.r + vert.r);
}

std::vector<double> adjacent_correlations(const HsiCube& cube) {
  if (cube.bands() < 2) throw DimensionError("adjacent band correlation requires >= 2 bands");
  std::vector<double> out;
  for (std::size_t b = 0; b + 1 < cube.bands(); ++b) {
    const auto p = cube.band(b);
    const auto q = cube.band(b + 1);
    const auto c = pearson(
        p.size(), [&](std::size_t i) { return p[i]; }, [&](std::size_t i) { return q[i]; });
    if (c.degenerate) {
      out.push_back(std::equal(p.begin(), p.end(), q.begin()) ? 1.0 : 0.0);
    } else {
      out.push_back(c.r);
    }
  }
  return out;
}

}  // namespace

bool DegradationPrompt::valid() const {
  for (double v : values()) {
    if (!std::isfinite(v)) return false;
  }
  return hfer >= 0.0 && hfer <= 1.0 && stu >= 0.0 && stu <= 1.0 && scc >= -1.0 && scc <= 1.0 &&
         scm >= 0.0 && scsd >= 0.0 && gsd >= 0.0;
}

double hfer(const HsiCube& cube, unsigned threads) {
  require_spatial(cube, 8, "hfer");
  return mean_over_bands(cube, threads, [&](std::span<const double> p) {
    return band_hfer(p, cube.height(), cube.width());
  });
}

double stu(const HsiCube& cube, unsigned threads) {
  require_spatial(cube, 8, "stu");
  return mean_over_bands(cube, threads, [&](std::span<const double> p) {
    return band_stu(p, cube.height(), cube.width());
  });
}

SpectralCurvature spectral_curvature(const HsiCube& cube) {
  const std::size_t c = cube.bands();
  if (c < 4) throw DimensionError("spectral curvature requires >= 4 bands");
  std::vector<double> s(c, 0.0);
  for (std::size_t b = 0; b < c; ++b) {
    double total = 0.0;
    for (double v : cube.band(b)) total += v;
    s[b] = total / static_cast<double>(cube.plane_size());
  }
  std::vector<double> kappa(c - 2);
  for (std::size_t i = 1; i + 1 < c; ++i) kappa[i - 1] = s[i - 1] - 2.0 * s[i] + s[i + 1];

  double abs_sum = 0.0;
  double mean = 0.0;
  for (double k : kappa) {
    abs_sum += std::abs(k);
    mean += k;
  }
  mean /= static_cast<double>(kappa.size());
  double ss = 0.0;
  for (double k : kappa) ss += (k - mean) * (k - mean);
  return {abs_sum / static_cast<double>(kappa.size()),
          std::sqrt(ss / static_cast<double>(c - 3))};
}

double gsd(const HsiCube& cube, unsigned threads) {
  require_spatial(cube, 3, "gsd");
  return mean_over_bands(cube, threads, [&](std::span<const double> p) {
    return sample_std(gradient_magnitudes(p, cube.height(), cube.width()));
  });
}

double scc(const HsiCube& cube, unsigned threads) {
  require_spatial(cube, 2, "scc");
  return mean_over_bands(cube, threads, [&](std::span<const double> p) {
    return band_scc(p, cube.height(), cube.width());
  });
}

DegradationPrompt prompt(const HsiCube& cube, unsigned threads) {
  const HsiCube n = normalize(cube);
  const auto curvature = spectral_curvature(n);
  return DegradationPrompt{hfer(n, threads), stu(n, threads), curvature.scm,
                           curvature.scsd,   gsd(n, threads), scc(n, threads)};
}

double mean_gradient_magnitude(const HsiCube& cube) {
  require_spatial(cube, 3, "mean_gradient_magnitude");
  return mean_over_bands(cube, 1, [&](std::span<const double> p) {
    const auto m = gradient_magnitudes(p, cube.height(), cube.width());
    return std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
  });
}

double max_gradient_magnitude(const HsiCube& cube) {
  require_spatial(cube, 3, "max_gradient_magnitude");
  double best = 0.0;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const auto m = gradient_magnitudes(cube.band(b), cube.height(), cube.width());
    best = std::max(best, *std::max_element(m.begin(), m.end()));
  }
  return best;
}

double missing_data_ratio(const HsiCube& cube) {
  const auto zeros = std::count(cube.data().begin(), cube.data().end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(cube.size());
}

double effective_rank(const HsiCube& cube) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> m(cube.data().data(), static_cast<Eigen::Index>(cube.bands()),
                                     static_cast<Eigen::Index>(cube.plane_size()));
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double total = sv.sum();
  if (!(total > 0.0)) return 0.0;
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double p = sv[i] / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

double mean_adjacent_correlation(const HsiCube& cube) {
  const auto c = adjacent_correlations(cube);
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

double std_adjacent_correlation(const HsiCube& cube) {
  return sample_std(adjacent_correlations(cube));
}

double spectral_entropy(const HsiCube& cube) {
  const std::size_t c = cube.bands();
  if (c < 2) return 0.0;
  const std::size_t n = cube.plane_size();
  const double log_c = std::log(static_cast<double>(c));
  const auto data = cube.data();
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (std::size_t b = 0; b < c; ++b) sum += std::abs(data[b * n + p]);
    if (sum == 0.0) continue;
    double h = 0.0;
    for (std::size_t b = 0; b < c; ++b) {
      const double q = std::abs(data[b * n + p]) / sum;
      if (q > 0.0) h -= q * std::log(q);
    }
    total += h / log_c;
  }
  return total / static_cast<double>(n);
}

double dominant_frequency_strength(const HsiCube& cube) {
  return mean_over_bands(cube, 1, [&](std::span<const double> p) {
    const auto spectrum = fft2(p, cube.height(), cube.width());
    double peak = 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < spectrum.size(); ++i) {
      const double e = std::norm(spectrum[i]);
      peak = std::max(peak, e);
      total += e;
    }
    return total > 0.0 ? peak / total : 0.0;
  });
}

MetricRegistry MetricRegistry::standard() {
  MetricRegistry r;
  r.add("hfer", [](const HsiCube& c) { return hfer(c); });
  r.add("stu", [](const HsiCube& c) { return stu(c); });
  r.add("scm", [](const HsiCube& c) { return spectral_curvature(c).scm; });
  r.add("scsd", [](const HsiCube& c) { return spectral_curvature(c).scsd; });
  r.add("gsd", [](const HsiCube& c) { return gsd(c); });
  r.add("scc", [](const HsiCube& c) { return scc(c); });
  r.add("mean_gradient_magnitude", mean_gradient_magnitude);
  r.add("max_gradient_magnitude", max_gradient_magnitude);
  r.add("missing_data_ratio", missing_data_ratio);
  r.add("effective_rank", effective_rank);
  r.add("mean_adjacent_correlation", mean_adjacent_correlation);
  r.add("std_adjacent_correlation", std_adjacent_correlation);
  r.add("spectral_entropy", spectral_entropy);
  r.add("dominant_frequency_strength", dominant_frequency_strength);
  return r;
}

void MetricRegistry::add(std::string name, MetricFn fn) {
  for (const auto& [existing, f] : entries_) {
    if (existing == name) throw ParameterError("metric \"" + name + "\" is already registered");
  }
  entries_.emplace_back(std::move(name), std::move(fn));
}

std::vector<std::string> MetricRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, fn] : entries_) out.push_back(name);
  return out;
}

std::vector<double> MetricRegistry::evaluate(const HsiCube& cube) const {
  const HsiCube n = normalize(cube);
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& [name, fn] : entries_) out.push_back(fn(n));
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_metrics_csv(const std::vector<std::string>& names,
                               const std::vector<MetricRow>& rows) {
  std::ostringstream out;
  out << "path,label";
  for (const auto& n : names) out << ',' << csv_field(n);
  out << '\n';
  char buf[32];
  for (const auto& row : rows) {
    if (row.values.size() != names.size()) {
      throw ShapeError("metrics row for '" + row.path + "' has " +
                       std::to_string(row.values.size()) + " values, expected " +
                       std::to_string(names.size()));
    }
    out << csv_field(row.path) << ',' << csv_field(row.label);
    for (double v : row.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hsdeg
