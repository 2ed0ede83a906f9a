#pragma once

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsdeg/cube.hpp"

namespace hsdeg {

/// Radial cutoff of the high-frequency set, in cycles/sample.
inline constexpr double kHighFrequencyCutoff = 0.25;
/// Magnitude floor applied to Fourier magnitudes in the texture-uniformity ratio.
inline constexpr double kMagnitudeFloor = 1e-12;

/// Six-metric degradation descriptor, fixed order
/// (hfer, stu, scm, scsd, gsd, scc).
struct DegradationPrompt {
  double hfer = 0.0;
  double stu = 0.0;
  double scm = 0.0;
  double scsd = 0.0;
  double gsd = 0.0;
  double scc = 0.0;

  static constexpr std::array<std::string_view, 6> kNames = {"hfer", "stu", "scm",
                                                             "scsd", "gsd", "scc"};

  std::array<double, 6> values() const { return {hfer, stu, scm, scsd, gsd, scc}; }
  /// True when every value is finite and within its documented range.
  bool valid() const;
  bool operator==(const DegradationPrompt&) const = default;
};

// The metric functions below take the cube as given; `prompt` and the
// registry normalize first. `threads` only changes scheduling: per-band
// results are reduced sequentially in band order, so the value is
// bit-identical for any thread count.

/// Mean over bands of the fraction of DFT energy at radial frequency
/// >= kHighFrequencyCutoff. A band with zero energy contributes 0.
double hfer(const HsiCube& cube, unsigned threads = 1);

/// Mean over bands of geometric/arithmetic mean of the floored DFT
/// magnitudes. An all-zero band is spectrally flat and contributes 1.
double stu(const HsiCube& cube, unsigned threads = 1);

struct SpectralCurvature {
  double scm = 0.0;
  double scsd = 0.0;
};
/// Second differences of the spatially averaged spectrum: mean absolute value
/// and sample standard deviation (denominator bands - 3).
SpectralCurvature spectral_curvature(const HsiCube& cube);

/// Mean over bands of the sample standard deviation of central-difference
/// gradient magnitudes over interior pixels.
double gsd(const HsiCube& cube, unsigned threads = 1);

/// Mean over bands of the average of the horizontal and vertical
/// one-pixel-shift Pearson correlations. A band whose overlap has zero
/// variance contributes 1.
double scc(const HsiCube& cube, unsigned threads = 1);

/// All six metrics of normalize(cube).
DegradationPrompt prompt(const HsiCube& cube, unsigned threads = 1);

// Auxiliary candidates for the selection pipeline.
double mean_gradient_magnitude(const HsiCube& cube);
double max_gradient_magnitude(const HsiCube& cube);
/// Fraction of voxels that are exactly zero.
double missing_data_ratio(const HsiCube& cube);
/// exp(entropy) of the normalized singular values of the bands x pixels matrix.
double effective_rank(const HsiCube& cube);
/// Mean Pearson correlation between consecutive bands.
double mean_adjacent_correlation(const HsiCube& cube);
double std_adjacent_correlation(const HsiCube& cube);
/// Mean over pixels of the Shannon entropy of |spectrum|/sum, divided by
/// ln(bands). Pixels with an all-zero spectrum contribute 0.
double spectral_entropy(const HsiCube& cube);
/// Mean over bands of the largest non-DC power bin over total non-DC power.
double dominant_frequency_strength(const HsiCube& cube);

using MetricFn = std::function<double(const HsiCube&)>;

/// Named metrics evaluated on normalize(cube). The standard registry lists
/// the six prompt metrics first, then the auxiliaries.
class MetricRegistry {
 public:
  static MetricRegistry standard();

  void add(std::string name, MetricFn fn);
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<std::string> names() const;
  std::vector<double> evaluate(const HsiCube& cube) const;

 private:
  std::vector<std::pair<std::string, MetricFn>> entries_;
};

/// Metrics CSV: header "path,label,<names...>", one row per cube, values
/// printed with round-trip precision. Empty label means unknown.
struct MetricRow {
  std::string path;
  std::string label;
  std::vector<double> values;
};
std::string format_metrics_csv(const std::vector<std::string>& names,
                               const std::vector<MetricRow>& rows);

}  // namespace hsdeg
