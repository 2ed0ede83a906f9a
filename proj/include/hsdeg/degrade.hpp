#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hsdeg/cube.hpp"

namespace hsdeg {

enum class DegradationKind {
  GaussianNoise,
  PoissonNoise,
  GaussianBlur,
  MotionBlur,
  SuperRes,
  Inpaint,
  BandDrop,
};

std::string_view kind_name(DegradationKind kind);
DegradationKind kind_from_name(std::string_view name);

/// sigma255 is on the 8-bit scale; noise is added with sigma255/255 on [0,1]
/// data. When sigma255_range is set, sigma is drawn uniformly from it per
/// application using the recipe seed.
struct GaussianNoiseParams {
  double sigma255 = 50.0;
  std::optional<std::pair<double, double>> sigma255_range;
};
struct PoissonNoiseParams {
  double scale = 10.0;
};
struct GaussianBlurParams {
  int kernel_size = 9;
};
struct MotionBlurParams {
  int radius = 15;
  double angle_deg = 45.0;
};
struct SuperResParams {
  int scale = 2;
};
struct InpaintParams {
  double mask_rate = 0.8;
};
struct BandDropParams {
  double drop_rate = 0.2;
};

using DegradationParams =
    std::variant<GaussianNoiseParams, PoissonNoiseParams, GaussianBlurParams, MotionBlurParams,
                 SuperResParams, InpaintParams, BandDropParams>;

struct DegradationRecipe {
  DegradationParams params;
  std::uint64_t seed = 0;

  DegradationKind kind() const { return static_cast<DegradationKind>(params.index()); }
  /// Throws ParameterError naming the offending field.
  void validate() const;
};

struct DegradationMask {
  /// Inpaint: height*width flags, 1 = missing (shared by every band).
  std::vector<std::uint8_t> missing_pixels;
  /// BandDrop: zeroed band indices, ascending.
  std::vector<std::size_t> dropped_bands;
};

struct DegradedPair {
  HsiCube clean;
  HsiCube degraded;
  DegradationRecipe recipe;
  std::optional<DegradationMask> mask;
  /// Sigma actually used: blur sigma in pixels, or noise sigma255.
  std::optional<double> sigma;
};

/// Applies the recipe to a [0,1] cube. Deterministic in (recipe, cube).
DegradedPair apply(const DegradationRecipe& recipe, const HsiCube& cube);

/// 0.3 * ((K - 1) / 2 - 1) + 0.8 for odd K >= 3.
double blur_sigma_from_kernel(int kernel_size);

/// Normalized K x K isotropic Gaussian, row-major.
std::vector<double> gaussian_kernel(int kernel_size);
/// (2r+1)^2 binary line through the center at angle_deg (counter-clockwise
/// from +x, image y pointing down), normalized to sum 1.
std::vector<double> motion_kernel(int radius, double angle_deg);

HsiCube gaussian_blur(const HsiCube& cube, int kernel_size);
HsiCube motion_blur(const HsiCube& cube, int radius, double angle_deg);
/// Catmull-Rom bicubic downsample by `scale`, then zero-insertion unpooling
/// back to full size (each low-res sample at the top-left of its block).
HsiCube super_res_degrade(const HsiCube& cube, int scale);
/// Unclamped Poisson(x * scale) / scale with per-band substreams.
HsiCube poisson_noise(const HsiCube& cube, double scale, std::uint64_t seed);
/// Unclamped x + N(0, (sigma255/255)^2) with per-band substreams.
HsiCube gaussian_noise(const HsiCube& cube, double sigma255, std::uint64_t seed);
std::pair<HsiCube, DegradationMask> inpaint(const HsiCube& cube, double mask_rate,
                                            std::uint64_t seed);
std::pair<HsiCube, DegradationMask> band_drop(const HsiCube& cube, double drop_rate,
                                              std::uint64_t seed);

/// Number of bands removed by band_drop: round(rate * bands), at least one
/// and at most bands - 1.
std::size_t band_drop_count(double drop_rate, std::size_t bands);

void to_json(nlohmann::json& j, const DegradationRecipe& recipe);
void from_json(const nlohmann::json& j, DegradationRecipe& recipe);

}  // namespace hsdeg
