#include "hsdeg/cube.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "hsdeg/errors.hpp"
#include "hsdeg/file_io.hpp"

namespace hsdeg {

HsiCube::HsiCube(std::size_t height, std::size_t width, std::size_t bands,
                 std::vector<double> data, ValueRange range,
                 std::optional<std::vector<double>> wavelengths)
    : height_(height),
      width_(width),
      bands_(bands),
      data_(std::move(data)),
      range_(range),
      wavelengths_(std::move(wavelengths)) {
  if (height_ == 0 || width_ == 0 || bands_ == 0) {
    throw DimensionError("cube dimensions must be positive, got " + std::to_string(height_) +
                         "x" + std::to_string(width_) + "x" + std::to_string(bands_));
  }
  if (data_.size() / bands_ / width_ != height_ || data_.size() % (bands_ * width_) != 0) {
    throw DimensionError("cube payload has " + std::to_string(data_.size()) +
                         " values, expected height*width*bands = " +
                         std::to_string(height_ * width_ * bands_));
  }
  if (!(range_.lo < range_.hi) || !std::isfinite(range_.lo) || !std::isfinite(range_.hi)) {
    throw DomainError("value_range requires finite lo < hi");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DomainError("cube value at index " + std::to_string(i) + " is not finite");
    }
  }
  if (wavelengths_) {
    const auto& wl = *wavelengths_;
    if (wl.size() != bands_) {
      throw DimensionError("wavelengths has " + std::to_string(wl.size()) + " entries, expected " +
                           std::to_string(bands_));
    }
    for (std::size_t i = 0; i < wl.size(); ++i) {
      if (!std::isfinite(wl[i]) || (i > 0 && !(wl[i] > wl[i - 1]))) {
        throw DomainError("wavelengths must be finite and strictly increasing");
      }
    }
  }
}

HsiCube HsiCube::filled(std::size_t height, std::size_t width, std::size_t bands, double value) {
  return HsiCube(height, width, bands, std::vector<double>(height * width * bands, value));
}

std::span<const double> HsiCube::band(std::size_t b) const {
  if (b >= bands_) throw DimensionError("band index " + std::to_string(b) + " out of range");
  return std::span<const double>(data_).subspan(b * plane_size(), plane_size());
}

HsiCube HsiCube::with_data(std::vector<double> data) const {
  return HsiCube(height_, width_, bands_, std::move(data), range_, wavelengths_);
}

HsiCube normalize(const HsiCube& cube) {
  const auto values = cube.data();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
  } else {
    const double span = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = std::clamp((values[i] - lo) / span, 0.0, 1.0);
    }
  }
  return HsiCube(cube.height(), cube.width(), cube.bands(), std::move(out), ValueRange{0.0, 1.0},
                 cube.wavelengths());
}

namespace {

constexpr std::uint8_t kFlagWavelengths = 0x01;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const std::byte> b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(b[off + i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::span<const std::byte> b, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::to_integer<std::uint64_t>(b[off + i]) << (8 * i);
  return v;
}

std::uint32_t checked_dim(std::size_t v, const char* name) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError(std::string(name) + " does not fit the HSC u32 header field");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::byte> encode_hsc(const HsiCube& cube, HscDtype dtype) {
  const std::size_t elem = dtype == HscDtype::f32 ? 4 : 8;
  std::vector<std::byte> out;
  const std::size_t wl_bytes = cube.wavelengths() ? cube.bands() * 8 : 0;
  out.reserve(kHscHeaderSize + wl_bytes + cube.size() * elem);
  for (char c : {'H', 'S', 'C', '1'}) out.push_back(static_cast<std::byte>(c));
  put_u32(out, checked_dim(cube.height(), "height"));
  put_u32(out, checked_dim(cube.width(), "width"));
  put_u32(out, checked_dim(cube.bands(), "bands"));
  out.push_back(static_cast<std::byte>(dtype));
  out.push_back(static_cast<std::byte>(cube.wavelengths() ? kFlagWavelengths : 0));
  out.push_back(std::byte{0});
  out.push_back(std::byte{0});
  if (cube.wavelengths()) {
    for (double w : *cube.wavelengths()) put_u64(out, std::bit_cast<std::uint64_t>(w));
  }
  for (double v : cube.data()) {
    if (dtype == HscDtype::f32) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

HsiCube decode_hsc(std::span<const std::byte> bytes) {
  const std::size_t size = bytes.size();
  if (size < 4) throw FormatError("truncated header: missing magic", size);
  if (bytes[0] != std::byte{'H'} || bytes[1] != std::byte{'S'} || bytes[2] != std::byte{'C'} ||
      bytes[3] != std::byte{'1'}) {
    throw FormatError("bad magic, expected \"HSC1\"", 0);
  }
  if (size < kHscHeaderSize) throw FormatError("truncated header", size);

  const std::uint32_t height = get_u32(bytes, 4);
  const std::uint32_t width = get_u32(bytes, 8);
  const std::uint32_t bands = get_u32(bytes, 12);
  if (height == 0) throw FormatError("height must be positive", 4);
  if (width == 0) throw FormatError("width must be positive", 8);
  if (bands == 0) throw FormatError("bands must be positive", 12);

  const auto dtype_code = std::to_integer<std::uint8_t>(bytes[16]);
  if (dtype_code != 1 && dtype_code != 2) {
    throw FormatError("unknown dtype code " + std::to_string(dtype_code), 16);
  }
  const auto flags = std::to_integer<std::uint8_t>(bytes[17]);
  if ((flags & ~kFlagWavelengths) != 0) {
    throw FormatError("unknown flag bits " + std::to_string(flags), 17);
  }
  if (bytes[18] != std::byte{0} || bytes[19] != std::byte{0}) {
    throw FormatError("reserved bytes must be zero", 18);
  }
  const std::size_t elem = dtype_code == 1 ? 4 : 8;

  // 32-bit dims multiply to at most 2^96; guard before sizing anything.
  const unsigned __int128 count128 =
      static_cast<unsigned __int128>(height) * width * bands;
  const unsigned __int128 max_count = std::numeric_limits<std::size_t>::max() / 16;
  if (count128 > max_count) throw FormatError("dimension overflow in header", 4);
  const auto count = static_cast<std::size_t>(count128);

  std::size_t off = kHscHeaderSize;
  std::optional<std::vector<double>> wavelengths;
  if (flags & kFlagWavelengths) {
    if ((size - off) / 8 < bands) {
      throw FormatError("truncated wavelengths: expected " + std::to_string(bands) +
                            " f64 values, found " + std::to_string((size - off) / 8),
                        off + ((size - off) / 8) * 8);
    }
    wavelengths.emplace(bands);
    for (std::uint32_t i = 0; i < bands; ++i, off += 8) {
      (*wavelengths)[i] = std::bit_cast<double>(get_u64(bytes, off));
      if (!std::isfinite((*wavelengths)[i]) || (i > 0 && !((*wavelengths)[i] > (*wavelengths)[i - 1]))) {
        throw FormatError("wavelengths must be finite and strictly increasing", off);
      }
    }
  }

  const std::size_t available = (size - off) / elem;
  if (available < count) {
    throw FormatError("truncated payload: header declares " + std::to_string(height) + "x" +
                          std::to_string(width) + "x" + std::to_string(bands) + " = " +
                          std::to_string(count) + " values, found " + std::to_string(available),
                      off + available * elem);
  }
  if (size - off != count * elem) {
    throw FormatError("trailing bytes after payload", off + count * elem);
  }

  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i, off += elem) {
    const double v = elem == 4 ? static_cast<double>(std::bit_cast<float>(get_u32(bytes, off)))
                               : std::bit_cast<double>(get_u64(bytes, off));
    if (!std::isfinite(v)) throw FormatError("non-finite payload value", off);
    data[i] = v;
  }
  return HsiCube(height, width, bands, std::move(data), ValueRange{}, std::move(wavelengths));
}

void write_hsc(const HsiCube& cube, const std::filesystem::path& path, HscDtype dtype) {
  write_file_atomic(path, encode_hsc(cube, dtype));
}

HsiCube read_hsc(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_hsc(bytes);
}

}  // namespace hsdeg
