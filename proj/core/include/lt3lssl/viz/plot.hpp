#pragma once

#include "lt3lssl/common/png_io.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace lt3lssl::viz {

using Rgb = std::array<std::uint8_t, 3>;

// Categorical palette, cycled by series index.
Rgb series_color(std::size_t i);

// Line chart of equally spaced series on a shared y range [y_min, y_max].
// Each series is drawn as a polyline over x = 0..n-1; NaN points break lines.
Raster line_plot(const std::vector<std::vector<double>>& series, double y_min, double y_max,
                 std::int64_t width = 640, std::int64_t height = 400);

// Bar chart; `markers` (same length, optional) are drawn as horizontal ticks
// over each bar, e.g. a reference proportion.
Raster bar_plot(const std::vector<double>& values, const std::vector<double>& markers, double y_max,
                std::int64_t width = 640, std::int64_t height = 400);

// Source-over blend of `overlay` onto `base` (both RGB, same size).
Raster blend(const Raster& base, const Raster& overlay, double alpha);

}  // namespace lt3lssl::viz
