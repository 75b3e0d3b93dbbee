#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lt3lssl {

// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Raster {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(std::int64_t w, std::int64_t h, std::int64_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w * h * c), fill) {}

  std::uint8_t& at(std::int64_t x, std::int64_t y, std::int64_t ch = 0) {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + ch)];
  }
  std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t ch = 0) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + ch)];
  }
};

// Writes with fixed compression settings and no timestamps, so equal rasters
// produce equal bytes.
void write_png(const std::filesystem::path& path, const Raster& raster);

// Gray, gray+alpha, RGB and RGBA 8-bit inputs are accepted; alpha is dropped.
Raster read_png(const std::filesystem::path& path);

}  // namespace lt3lssl
