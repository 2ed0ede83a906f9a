#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hsdeg {

/// Unnormalized forward 2D DFT of a real row-major plane.
/// Bin (u, v) is stored at index u * width + v.
std::vector<std::complex<double>> fft2(std::span<const double> plane, std::size_t height,
                                       std::size_t width);

/// Inverse 2D DFT, scaled by 1/(height*width).
std::vector<std::complex<double>> ifft2(std::span<const std::complex<double>> spectrum,
                                        std::size_t height, std::size_t width);

/// Signed frequency of DFT index k on an axis of length n, in cycles/sample,
/// folded to [-0.5, 0.5].
inline double folded_frequency(std::size_t k, std::size_t n) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (2 * k <= n ? kk : kk - nn) / nn;
}

}  // namespace hsdeg
