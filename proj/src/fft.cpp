#include "hsdeg/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>

namespace hsdeg {
namespace {

// FFTW planning is not thread-safe; execution with a plan is. Each thread
// keeps its own plans and fftw_malloc'd buffers so execution never shares
// state and buffer alignment (hence the chosen codelets) is always the same.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* ptr = nullptr;
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct Plan2d {
  std::size_t n;
  FftwBuffer in;
  FftwBuffer out;
  fftw_plan plan = nullptr;

  Plan2d(std::size_t h, std::size_t w, int sign) : n(h * w), in(n), out(n) {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), in.ptr, out.ptr, sign,
                            FFTW_ESTIMATE);
  }
  ~Plan2d() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  Plan2d(const Plan2d&) = delete;
  Plan2d& operator=(const Plan2d&) = delete;
};

Plan2d& plan_for(std::size_t h, std::size_t w, int sign) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, int>, std::unique_ptr<Plan2d>> cache;
  auto& slot = cache[{h, w, sign}];
  if (!slot) slot = std::make_unique<Plan2d>(h, w, sign);
  return *slot;
}

}  // namespace

std::vector<std::complex<double>> fft2(std::span<const double> plane, std::size_t height,
                                       std::size_t width) {
  Plan2d& p = plan_for(height, width, FFTW_FORWARD);
  for (std::size_t i = 0; i < p.n; ++i) {
    p.in.ptr[i][0] = plane[i];
    p.in.ptr[i][1] = 0.0;
  }
  fftw_execute(p.plan);
  std::vector<std::complex<double>> out(p.n);
  for (std::size_t i = 0; i < p.n; ++i) out[i] = {p.out.ptr[i][0], p.out.ptr[i][1]};
  return out;
}

std::vector<std::complex<double>> ifft2(std::span<const std::complex<double>> spectrum,
                                        std::size_t height, std::size_t width) {
  Plan2d& p = plan_for(height, width, FFTW_BACKWARD);
  for (std::size_t i = 0; i < p.n; ++i) {
    p.in.ptr[i][0] = spectrum[i].real();
    p.in.ptr[i][1] = spectrum[i].imag();
  }
  fftw_execute(p.plan);
  const double scale = 1.0 / static_cast<double>(p.n);
  std::vector<std::complex<double>> out(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    out[i] = {p.out.ptr[i][0] * scale, p.out.ptr[i][1] * scale};
  }
  return out;
}

}  // namespace hsdeg
