#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hsdeg {

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a) of an
/// index onto [0, n). Valid for any integer index.
std::size_t reflect_index(long long i, std::size_t n);

/// 2D convolution of a row-major plane with a kh x kw kernel (odd sizes,
/// centered), reflect borders. Output has the plane's size.
std::vector<double> convolve2d_reflect(std::span<const double> plane, std::size_t height,
                                       std::size_t width, std::span<const double> kernel,
                                       std::size_t kh, std::size_t kw);

}  // namespace hsdeg
