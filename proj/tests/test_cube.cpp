#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <limits>

#include "hsdeg/cube.hpp"
#include "hsdeg/errors.hpp"
#include "hsdeg/file_io.hpp"
#include "hsdeg/metrics.hpp"
#include "oracles.hpp"

using namespace hsdeg;

namespace {

std::vector<std::byte> header(const char* magic, std::uint32_t h, std::uint32_t w, std::uint32_t b,
                              std::uint8_t dtype = 1, std::uint8_t flags = 0) {
  std::vector<std::byte> out(kHscHeaderSize);
  std::memcpy(out.data(), magic, 4);
  std::memcpy(out.data() + 4, &h, 4);
  std::memcpy(out.data() + 8, &w, 4);
  std::memcpy(out.data() + 12, &b, 4);
  out[16] = std::byte{dtype};
  out[17] = std::byte{flags};
  return out;
}

void append_f32(std::vector<std::byte>& out, std::size_t n, float v = 0.25f) {
  for (std::size_t i = 0; i < n; ++i) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + 4);
  }
}

template <class F>
std::uint64_t format_offset(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("expected FormatError");
  return 0;
}

}  // namespace

TEST_CASE("cube construction validates invariants") {
  CHECK_THROWS_AS(HsiCube(0, 2, 2, {}), DimensionError);
  CHECK_THROWS_AS(HsiCube(2, 2, 2, std::vector<double>(7)), DimensionError);
  std::vector<double> bad(8, 0.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(HsiCube(2, 2, 2, bad), DomainError);
  bad[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(HsiCube(2, 2, 2, bad), DomainError);
  CHECK_THROWS_AS(HsiCube(2, 2, 2, std::vector<double>(8), {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(HsiCube(2, 2, 2, std::vector<double>(8), {}, std::vector<double>{500.0}),
                  DimensionError);
  CHECK_THROWS_AS(HsiCube(2, 2, 2, std::vector<double>(8), {}, std::vector<double>{500.0, 500.0}),
                  DomainError);
  const HsiCube ok(2, 2, 2, std::vector<double>(8), {}, std::vector<double>{400.0, 410.0});
  CHECK(ok.wavelengths()->size() == 2);
}

TEST_CASE("band-sequential layout") {
  std::vector<double> d(2 * 3 * 4);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(i);
  const HsiCube c(2, 3, 4, d);
  CHECK(c.at(1, 0, 0) == 6.0);
  CHECK(c.at(2, 1, 2) == 2 * 6 + 1 * 3 + 2);
  CHECK(c.band(3).front() == 18.0);
  CHECK_THROWS_AS(c.band(4), DimensionError);
}

TEST_CASE("normalize") {
  SUBCASE("{0,255} maps to {0,1}") {
    const HsiCube c(1, 2, 1, {0.0, 255.0}, {0.0, 255.0});
    const auto n = normalize(c);
    CHECK(n.data()[0] == 0.0);
    CHECK(n.data()[1] == 1.0);
    CHECK(n.value_range() == ValueRange{0.0, 1.0});
  }
  SUBCASE("constant cube maps to 0.5") {
    const auto n = normalize(HsiCube::filled(3, 3, 2, 3.0));
    for (double v : n.data()) CHECK(v == 0.5);
  }
  SUBCASE("already [0,1] with both extremes is unchanged") {
    auto c = oracle::random_cube(8, 8, 3, 1);
    std::vector<double> d(c.data().begin(), c.data().end());
    d[0] = 0.0;
    d[1] = 1.0;
    c = c.with_data(d);
    const auto n = normalize(c);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(n.data()[i] == doctest::Approx(d[i]).epsilon(1e-15));
  }
  SUBCASE("idempotent") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto once = normalize(oracle::gaussian_cube(5, 7, 3, s));
      CHECK(normalize(once) == once);
    }
  }
}

TEST_CASE("HSC round trip is bit-exact") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    std::mt19937_64 rng(s);
    const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9, b = 1 + rng() % 5;
    auto c = oracle::gaussian_cube(h, w, b, s);
    std::optional<std::vector<double>> wl;
    if (s % 2 == 0) {
      wl.emplace();
      for (std::size_t i = 0; i < b; ++i) wl->push_back(400.0 + 10.3 * static_cast<double>(i));
    }
    c = HsiCube(h, w, b, std::vector<double>(c.data().begin(), c.data().end()), {}, wl);
    const auto back = decode_hsc(encode_hsc(c));
    CHECK(back == c);
  }
  SUBCASE("denormals, signed zero and extremes survive") {
    const HsiCube c(1, 4, 1,
                    {-0.0, std::numeric_limits<double>::denorm_min(),
                     std::numeric_limits<double>::max(), -std::numeric_limits<double>::lowest()});
    const auto back = decode_hsc(encode_hsc(c));
    CHECK(std::memcmp(back.data().data(), c.data().data(), 4 * sizeof(double)) == 0);
  }
  SUBCASE("f32 payload stores floats") {
    const HsiCube c(1, 2, 1, {0.25, 0.5});
    const auto bytes = encode_hsc(c, HscDtype::f32);
    CHECK(bytes.size() == kHscHeaderSize + 8);
    CHECK(decode_hsc(bytes) == c);
  }
  SUBCASE("through the filesystem") {
    const auto dir = std::filesystem::temp_directory_path() / "hsdeg_test_cube";
    std::filesystem::create_directories(dir);
    const auto c = synth_scene(SynthSpec{.height = 8, .width = 8, .bands = 5, .seed = 3});
    write_hsc(c, dir / "c.hsc");
    CHECK(read_hsc(dir / "c.hsc") == c);
    CHECK_THROWS_AS(read_hsc(dir / "missing.hsc"), IoError);
  }
}

TEST_CASE("HSC format errors carry byte offsets") {
  SUBCASE("bad magic") {
    auto bytes = header("XXXX", 2, 2, 2);
    append_f32(bytes, 8);
    CHECK(format_offset([&] { decode_hsc(bytes); }) == 0);
  }
  SUBCASE("declared 2x2x2 with 7 floats is truncated") {
    auto bytes = header("HSC1", 2, 2, 2);
    append_f32(bytes, 7);
    CHECK(format_offset([&] { decode_hsc(bytes); }) == kHscHeaderSize + 7 * 4);
  }
  SUBCASE("short header") {
    auto bytes = header("HSC1", 2, 2, 2);
    bytes.resize(10);
    CHECK(format_offset([&] { decode_hsc(bytes); }) == 10);
  }
  SUBCASE("zero dimension") {
    CHECK(format_offset([&] { decode_hsc(header("HSC1", 0, 2, 2)); }) == 4);
  }
  SUBCASE("unknown dtype") {
    CHECK(format_offset([&] { decode_hsc(header("HSC1", 1, 1, 1, 9)); }) == 16);
  }
  SUBCASE("unknown flags") {
    CHECK(format_offset([&] { decode_hsc(header("HSC1", 1, 1, 1, 1, 0x80)); }) == 17);
  }
  SUBCASE("nonzero reserved") {
    auto bytes = header("HSC1", 1, 1, 1);
    bytes[19] = std::byte{1};
    append_f32(bytes, 1);
    CHECK(format_offset([&] { decode_hsc(bytes); }) == 18);
  }
  SUBCASE("dimension overflow") {
    auto bytes = header("HSC1", 0xffffffffu, 0xffffffffu, 0xffffffffu);
    CHECK_THROWS_AS(decode_hsc(bytes), FormatError);
  }
  SUBCASE("truncated wavelengths") {
    auto bytes = header("HSC1", 1, 1, 2, 1, 1);
    bytes.resize(bytes.size() + 8);
    CHECK(format_offset([&] { decode_hsc(bytes); }) == kHscHeaderSize + 8);
  }
  SUBCASE("trailing bytes") {
    auto bytes = header("HSC1", 1, 1, 1);
    append_f32(bytes, 2);
    CHECK(format_offset([&] { decode_hsc(bytes); }) == kHscHeaderSize + 4);
  }
  SUBCASE("non-finite payload") {
    auto bytes = header("HSC1", 1, 1, 1);
    append_f32(bytes, 1, std::numeric_limits<float>::infinity());
    CHECK_THROWS_AS(decode_hsc(bytes), FormatError);
  }
}

TEST_CASE("synth_scene") {
  SUBCASE("pure function of the spec") {
    const SynthSpec s{.height = 16, .width = 12, .bands = 9, .seed = 11};
    CHECK(synth_scene(s) == synth_scene(s));
    auto other = s;
    other.seed = 12;
    CHECK_FALSE(synth_scene(s) == synth_scene(other));
  }
  SUBCASE("values in [0,1]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto c = synth_scene(SynthSpec{.seed = seed});
      for (double v : c.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("empty texture list gives constant bands") {
    const auto c = synth_scene(SynthSpec{.height = 8, .width = 8, .bands = 6, .seed = 5,
                                         .n_materials = 1, .texture_freqs = {}});
    for (std::size_t b = 0; b < c.bands(); ++b) {
      for (double v : c.band(b)) CHECK(v == c.band(b)[0]);
    }
  }
  SUBCASE("32x32x31 seed 7 has smooth spectra and textured space") {
    const auto dp = prompt(synth_scene(SynthSpec{.seed = 7}));
    CHECK(dp.scm < 0.05);
    CHECK(dp.gsd > 0.0);
    CHECK(dp.scc > 0.9);
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(synth_scene(SynthSpec{.height = 0}), DimensionError);
    CHECK_THROWS_AS(synth_scene(SynthSpec{.n_materials = 0}), ParameterError);
    CHECK_THROWS_AS(synth_scene(SynthSpec{.texture_freqs = {1.0, -2.0}}), ParameterError);
  }
}

TEST_CASE("atomic text write replaces the file") {
  const auto dir = std::filesystem::temp_directory_path() / "hsdeg_test_cube";
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "t.txt", "first");
  write_text_atomic(dir / "t.txt", "second");
  CHECK(read_text_file(dir / "t.txt") == "second");
  std::size_t leftovers = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().filename().string().find(".tmp") != std::string::npos) ++leftovers;
  }
  CHECK(leftovers == 0);
}
