#pragma once

#include "hsdeg/cube.hpp"

namespace hsdeg {

struct QualityScore {
  /// +infinity when the cubes are identical.
  double psnr_db = 0.0;
  double ssim = 0.0;
};

/// 10 log10(peak^2 / MSE) over all voxels.
double psnr(const HsiCube& x, const HsiCube& y, double peak = 1.0);

/// Band-averaged SSIM: 11x11 Gaussian window (sigma 1.5) over all valid
/// window positions, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2.
double ssim(const HsiCube& x, const HsiCube& y, double peak = 1.0);

QualityScore evaluate_quality(const HsiCube& x, const HsiCube& y, double peak = 1.0);

}  // namespace hsdeg
