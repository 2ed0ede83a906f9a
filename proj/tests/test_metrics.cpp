#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "hsdeg/degrade.hpp"
#include "hsdeg/errors.hpp"
#include "hsdeg/fft.hpp"
#include "hsdeg/metrics.hpp"
#include "oracles.hpp"

using namespace hsdeg;

namespace {

HsiCube spectrum_cube(const std::vector<double>& s, std::size_t h = 2, std::size_t w = 2) {
  std::vector<double> d;
  for (double v : s) d.insert(d.end(), h * w, v);
  return HsiCube(h, w, s.size(), d, {-100.0, 100.0});
}

HsiCube ramp_x(std::size_t h, std::size_t w, std::size_t bands = 1) {
  std::vector<double> d(h * w * bands);
  for (std::size_t b = 0; b < bands; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) d[(b * h + y) * w + x] = 0.25 * static_cast<double>(x);
    }
  }
  return HsiCube(h, w, bands, d, {0.0, 100.0});
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("fft agrees with a direct DFT") {
  const auto c = oracle::gaussian_cube(6, 10, 1, 4);
  const auto fast = fft2(c.band(0), 6, 10);
  const auto slow = oracle::naive_dft(c, 0);
  for (std::size_t i = 0; i < fast.size(); ++i) {
    CHECK(std::abs(fast[i] - slow[i]) < 1e-10);
  }
  const auto back = ifft2(fast, 6, 10);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].real() == doctest::Approx(c.band(0)[i]));
  CHECK(folded_frequency(0, 8) == 0.0);
  CHECK(folded_frequency(4, 8) == 0.5);
  CHECK(folded_frequency(5, 8) == -0.375);
}

TEST_CASE("hfer") {
  SUBCASE("constant band is 0") { CHECK(hfer(HsiCube::filled(16, 16, 3, 0.4)) == doctest::Approx(0.0)); }
  SUBCASE("+-1 checkerboard is 1") {
    std::vector<double> d(16 * 16);
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) d[y * 16 + x] = (x + y) % 2 ? 1.0 : -1.0;
    }
    CHECK(hfer(HsiCube(16, 16, 1, d, {-1.0, 1.0})) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("iid noise matches the high-frequency bin fraction") {
    std::size_t high = 0;
    for (std::size_t u = 0; u < 64; ++u) {
      for (std::size_t v = 0; v < 64; ++v) {
        if (std::hypot(oracle::signed_freq(u, 64), oracle::signed_freq(v, 64)) >= 0.25) ++high;
      }
    }
    const double fraction = static_cast<double>(high) / 4096.0;
    CHECK(std::abs(hfer(oracle::gaussian_cube(64, 64, 8, 77)) - fraction) < 0.02);
  }
  SUBCASE("matches the direct-DFT oracle") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto c = oracle::random_cube(8, 12, 2, s);
      CHECK(rel(hfer(c), oracle::hfer(c)) < 1e-9);
    }
  }
  SUBCASE("too small") { CHECK_THROWS_AS(hfer(HsiCube::filled(7, 16, 1, 0.0)), DimensionError); }
}

TEST_CASE("stu") {
  SUBCASE("constant band is about 0") { CHECK(stu(HsiCube::filled(16, 16, 2, 0.7)) < 1e-6); }
  SUBCASE("iid Gaussian noise is about 0.85") {
    const double expected =
        std::exp((std::numbers::ln2 - std::numbers::egamma) / 2.0) / std::sqrt(std::numbers::pi / 2.0);
    CHECK(expected == doctest::Approx(0.846).epsilon(1e-3));
    CHECK(std::abs(stu(oracle::gaussian_cube(64, 64, 8, 5)) - 0.85) < 0.02);
  }
  SUBCASE("all-zero band is spectrally flat") { CHECK(stu(HsiCube::filled(8, 8, 1, 0.0)) == 1.0); }
  SUBCASE("matches the direct-DFT oracle") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto c = oracle::random_cube(10, 8, 2, s + 10);
      CHECK(rel(stu(c), oracle::stu(c)) < 1e-9);
    }
  }
}

TEST_CASE("spectral curvature") {
  SUBCASE("affine spectrum is exactly zero") {
    std::vector<double> s;
    for (int i = 0; i < 31; ++i) s.push_back(0.5 * i - 3.0);
    const auto k = spectral_curvature(spectrum_cube(s));
    CHECK(k.scm == 0.0);
    CHECK(k.scsd == 0.0);
  }
  SUBCASE("[0,1,0,1,0]") {
    const auto k = spectral_curvature(spectrum_cube({0, 1, 0, 1, 0}));
    CHECK(k.scm == doctest::Approx(2.0));
    CHECK(k.scsd == doctest::Approx(std::sqrt(48.0 / 9.0)));
  }
  SUBCASE("quadratic") {
    std::vector<double> s;
    for (int i = 0; i < 9; ++i) s.push_back(static_cast<double>(i * i));
    const auto k = spectral_curvature(spectrum_cube(s));
    CHECK(k.scm == doctest::Approx(2.0));
    CHECK(k.scsd == doctest::Approx(0.0));
  }
  SUBCASE("uses the spatially averaged spectrum") {
    // pixel 0 has spectrum [0,2,0,2,0], pixel 1 all zeros: mean spectrum [0,1,0,1,0]
    const HsiCube c(1, 2, 5, {0, 0, 2, 0, 0, 0, 2, 0, 0, 0});
    CHECK(spectral_curvature(c).scm == doctest::Approx(2.0));
  }
  SUBCASE("needs four bands") { CHECK_THROWS_AS(spectral_curvature(spectrum_cube({0, 1, 2})), DimensionError); }
}

TEST_CASE("gsd") {
  SUBCASE("constant and ramp are 0") {
    CHECK(gsd(HsiCube::filled(9, 9, 2, 0.3)) == 0.0);
    CHECK(gsd(ramp_x(9, 11, 2)) == 0.0);
  }
  SUBCASE("noise is positive and matches the oracle") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto c = oracle::random_cube(16, 16, 4, s);
      const double v = gsd(c);
      CHECK(v > 0.0);
      CHECK(rel(v, oracle::gsd(c)) < 1e-12);
    }
  }
  SUBCASE("too small") { CHECK_THROWS_AS(gsd(HsiCube::filled(2, 5, 1, 0.0)), DimensionError); }
}

TEST_CASE("scc") {
  SUBCASE("constant cube is 1") { CHECK(scc(HsiCube::filled(5, 5, 3, 0.2)) == 1.0); }
  SUBCASE("ramp along x is 1") { CHECK(scc(ramp_x(6, 9)) == doctest::Approx(1.0).epsilon(1e-12)); }
  SUBCASE("iid noise is about 0") { CHECK(std::abs(scc(oracle::gaussian_cube(64, 64, 4, 3))) < 0.03); }
  SUBCASE("matches the oracle") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto c = oracle::random_cube(12, 9, 3, s + 40);
      CHECK(rel(scc(c), oracle::scc(c)) < 1e-10);
    }
  }
  SUBCASE("symmetric under transposition") {
    const auto c = oracle::random_cube(7, 7, 1, 8);
    std::vector<double> t(49);
    for (std::size_t y = 0; y < 7; ++y) {
      for (std::size_t x = 0; x < 7; ++x) t[x * 7 + y] = c.at(0, y, x);
    }
    CHECK(scc(HsiCube(7, 7, 1, t)) == doctest::Approx(scc(c)).epsilon(1e-12));
  }
  SUBCASE("too small") { CHECK_THROWS_AS(scc(HsiCube::filled(1, 5, 1, 0.0)), DimensionError); }
}

TEST_CASE("prompt") {
  SUBCASE("clean synthetic scene") {
    const auto dp = prompt(synth_scene(SynthSpec{.seed = 7}));
    CHECK(dp.valid());
    CHECK(dp.scm < 0.05);
    CHECK(dp.scc > 0.9);
  }
  SUBCASE("blur lowers texture uniformity; heavy inpainting raises it") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto clean = synth_scene(SynthSpec{.seed = s});
      const double base = prompt(clean).stu;
      CHECK(prompt(apply({GaussianBlurParams{15}, s}, clean).degraded).stu < base);
      CHECK(prompt(apply({InpaintParams{0.9}, s}, clean).degraded).stu > 0.7);
    }
  }
  SUBCASE("affine rescale of the raw cube leaves the prompt unchanged") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto c = oracle::random_cube(16, 16, 6, s);
      std::vector<double> d(c.data().begin(), c.data().end());
      for (double& v : d) v = 255.0 * v + 17.0;
      const auto a = prompt(c).values();
      const auto b = prompt(HsiCube(16, 16, 6, d, {0.0, 300.0})).values();
      for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
    }
  }
  SUBCASE("bounds over random cubes and every degradation") {
    const std::vector<DegradationParams> all = {
        GaussianNoiseParams{70.0}, PoissonNoiseParams{10.0}, GaussianBlurParams{15},
        MotionBlurParams{7, 45.0}, SuperResParams{4},        InpaintParams{0.9},
        BandDropParams{0.3}};
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto clean = synth_scene(SynthSpec{.seed = s + 100});
      CHECK(prompt(clean).valid());
      CHECK(prompt(oracle::random_cube(16, 16, 5, s)).valid());
      for (const auto& p : all) CHECK(prompt(apply({p, s}, clean).degraded).valid());
    }
  }
  SUBCASE("bit-identical across thread counts") {
    const auto c = apply({InpaintParams{0.7}, 3}, synth_scene(SynthSpec{.seed = 3})).degraded;
    const auto one = prompt(c, 1);
    CHECK(prompt(c, 2) == one);
    CHECK(prompt(c, 8) == one);
  }
  SUBCASE("valid() rejects out-of-range values") {
    DegradationPrompt dp;
    CHECK(dp.valid());
    dp.hfer = 1.5;
    CHECK_FALSE(dp.valid());
    dp.hfer = 0.5;
    dp.scc = std::nan("");
    CHECK_FALSE(dp.valid());
    dp.scc = -1.0;
    dp.gsd = -0.1;
    CHECK_FALSE(dp.valid());
  }
}

TEST_CASE("auxiliary metrics") {
  SUBCASE("missing data ratio") {
    CHECK(missing_data_ratio(HsiCube::filled(4, 4, 2, 0.0)) == 1.0);
    CHECK(missing_data_ratio(HsiCube(1, 4, 1, {0.0, 0.1, 0.0, 0.2})) == 0.5);
  }
  SUBCASE("mean adjacent correlation of identical bands is 1") {
    const auto c = oracle::random_cube(6, 6, 1, 3);
    std::vector<double> d;
    for (int b = 0; b < 5; ++b) d.insert(d.end(), c.data().begin(), c.data().end());
    const HsiCube same(6, 6, 5, d);
    CHECK(mean_adjacent_correlation(same) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std_adjacent_correlation(same) == doctest::Approx(0.0));
  }
  SUBCASE("effective rank") {
    const auto base = oracle::random_cube(5, 4, 1, 9);
    std::vector<double> d;
    for (double scale : {1.0, 0.5, 2.0, 3.0}) {
      for (double v : base.data()) d.push_back(scale * v);
    }
    CHECK(effective_rank(HsiCube(5, 4, 4, d, {0.0, 10.0})) == doctest::Approx(1.0).epsilon(1e-6));
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto c = oracle::random_cube(6, 5, 7, s);
      CHECK(rel(effective_rank(c), oracle::effective_rank(c)) < 1e-9);
    }
  }
  SUBCASE("spectral entropy is in [0,1]") {
    const double flat = spectral_entropy(HsiCube::filled(3, 3, 8, 0.5));
    CHECK(flat == doctest::Approx(1.0));
    const double v = spectral_entropy(oracle::random_cube(6, 6, 8, 2));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  SUBCASE("dominant frequency strength of a pure sinusoid") {
    std::vector<double> d(16 * 16);
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 16; ++x) d[y * 16 + x] = std::cos(2 * std::numbers::pi * 3.0 * x / 16.0);
    }
    // energy splits evenly between the +3 and -3 bins
    CHECK(dominant_frequency_strength(HsiCube(16, 16, 1, d, {-1.0, 1.0})) == doctest::Approx(0.5));
  }
  SUBCASE("gradient magnitudes") {
    const auto r = ramp_x(6, 6);
    CHECK(mean_gradient_magnitude(r) == doctest::Approx(0.25));
    CHECK(max_gradient_magnitude(r) == doctest::Approx(0.25));
  }
}

TEST_CASE("metric registry") {
  const auto reg = MetricRegistry::standard();
  const auto names = reg.names();
  CHECK(names.size() >= 12);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  for (std::size_t i = 0; i < 6; ++i) CHECK(names[i] == DegradationPrompt::kNames[i]);
  const auto c = synth_scene(SynthSpec{.seed = 1});
  const auto v = reg.evaluate(c);
  REQUIRE(v.size() == names.size());
  const auto dp = prompt(c).values();
  for (std::size_t i = 0; i < 6; ++i) CHECK(v[i] == dp[i]);
  for (double x : v) CHECK(std::isfinite(x));
  auto custom = MetricRegistry::standard();
  CHECK_THROWS_AS(custom.add("hfer", [](const HsiCube&) { return 0.0; }), ParameterError);
  custom.add("mean", [](const HsiCube& cube) {
    double t = 0.0;
    for (double x : cube.data()) t += x;
    return t / static_cast<double>(cube.size());
  });
  CHECK(custom.names().back() == "mean");
}

TEST_CASE("metrics CSV") {
  const auto text = format_metrics_csv({"hfer", "stu"}, {{"a.hsc", "blur", {0.5, 0.25}},
                                                         {"b,c.hsc", "", {1.0 / 3.0, 0.0}}});
  CHECK(text ==
        "path,label,hfer,stu\n"
        "a.hsc,blur,0.5,0.25\n"
        "\"b,c.hsc\",,0.33333333333333331,0\n");
}
