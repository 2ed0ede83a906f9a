#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace hsdeg {

struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const ValueRange&) const = default;
};

/// Hyperspectral cube of height x width pixels and `bands` spectral channels.
///
/// Storage is band-sequential: `bands` contiguous planes of height*width
/// values, each plane row-major. All values are finite; this is checked on
/// construction, so any HsiCube in hand satisfies its invariants.
class HsiCube {
 public:
  HsiCube(std::size_t height, std::size_t width, std::size_t bands,
          std::vector<double> data, ValueRange range = {},
          std::optional<std::vector<double>> wavelengths = std::nullopt);

  static HsiCube filled(std::size_t height, std::size_t width, std::size_t bands,
                        double value);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> band(std::size_t b) const;
  double at(std::size_t b, std::size_t y, std::size_t x) const {
    return data_[(b * height_ + y) * width_ + x];
  }

  const ValueRange& value_range() const noexcept { return range_; }
  const std::optional<std::vector<double>>& wavelengths() const noexcept {
    return wavelengths_;
  }

  /// Same dims, range and wavelengths with a new payload.
  HsiCube with_data(std::vector<double> data) const;

  bool same_shape(const HsiCube& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && bands_ == other.bands_;
  }

  bool operator==(const HsiCube&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t bands_;
  std::vector<double> data_;
  ValueRange range_;
  std::optional<std::vector<double>> wavelengths_;
};

/// Global min-max rescale to [0,1]. A constant cube maps to all 0.5.
HsiCube normalize(const HsiCube& cube);

// HSC v1 binary format, little-endian:
//   "HSC1" | u32 height | u32 width | u32 bands | u8 dtype (1=f32, 2=f64)
//   | u8 flags (bit0: wavelengths) | 2 reserved zero bytes
//   | [bands x f64 wavelengths] | payload, band-sequential, row-major
enum class HscDtype : std::uint8_t { f32 = 1, f64 = 2 };

inline constexpr std::size_t kHscHeaderSize = 20;

std::vector<std::byte> encode_hsc(const HsiCube& cube, HscDtype dtype = HscDtype::f64);
/// The file stores no value range; decoded cubes carry the default (0,1).
HsiCube decode_hsc(std::span<const std::byte> bytes);

void write_hsc(const HsiCube& cube, const std::filesystem::path& path,
               HscDtype dtype = HscDtype::f64);
HsiCube read_hsc(const std::filesystem::path& path);

/// Seeded synthetic scene used in place of real datasets.
struct SynthSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t bands = 31;
  std::uint64_t seed = 0;
  std::size_t n_materials = 4;
  /// Spatial frequencies of the abundance texture, cycles per image.
  std::vector<double> texture_freqs = {1.0, 2.0, 3.0};
};

/// Convex mixture of smooth Gaussian-bump endmember spectra with textured,
/// periodic abundance maps and shading. Values lie in [0,1]. An empty
/// texture_freqs list gives spatially constant abundances and shading, so
/// every band is constant.
HsiCube synth_scene(const SynthSpec& spec);

}  // namespace hsdeg
