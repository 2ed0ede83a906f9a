#include "hsdeg/convolve.hpp"

namespace hsdeg {

std::size_t reflect_index(long long i, std::size_t n) {
  const auto period = static_cast<long long>(2 * n);
  long long r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<long long>(n)) r = period - 1 - r;
  return static_cast<std::size_t>(r);
}

std::vector<double> convolve2d_reflect(std::span<const double> plane, std::size_t height,
                                       std::size_t width, std::span<const double> kernel,
                                       std::size_t kh, std::size_t kw) {
  const auto ry = static_cast<long long>(kh / 2);
  const auto rx = static_cast<long long>(kw / 2);
  std::vector<double> out(height * width, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (long long dy = -ry; dy <= ry; ++dy) {
        const std::size_t sy = reflect_index(static_cast<long long>(y) - dy, height);
        const double* krow = kernel.data() + (dy + ry) * static_cast<long long>(kw);
        const double* prow = plane.data() + sy * width;
        for (long long dx = -rx; dx <= rx; ++dx) {
          const std::size_t sx = reflect_index(static_cast<long long>(x) - dx, width);
          acc += krow[dx + rx] * prow[sx];
        }
      }
      out[y * width + x] = acc;
    }
  }
  return out;
}

}  // namespace hsdeg
