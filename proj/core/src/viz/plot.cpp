#include "lt3lssl/viz/plot.hpp"

#include "lt3lssl/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace lt3lssl::viz {
namespace {

constexpr std::int64_t kMargin = 24;
constexpr Rgb kAxis{40, 40, 40};
constexpr Rgb kGrid{225, 225, 225};

void put(Raster& r, std::int64_t x, std::int64_t y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= r.width || y >= r.height) return;
  for (std::int64_t ch = 0; ch < 3; ++ch) r.at(x, y, ch) = c[static_cast<std::size_t>(ch)];
}

void line(Raster& r, std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1, const Rgb& c) {
  const auto dx = std::abs(x1 - x0);
  const auto dy = -std::abs(y1 - y0);
  const auto sx = x0 < x1 ? 1 : -1;
  const auto sy = y0 < y1 ? 1 : -1;
  auto err = dx + dy;
  while (true) {
    put(r, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const auto e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void frame(Raster& r) {
  const auto x0 = kMargin;
  const auto y0 = r.height - kMargin;
  for (int k = 1; k < 5; ++k) {
    const auto y = y0 - (y0 - kMargin) * k / 4;
    line(r, x0, y, r.width - kMargin, y, kGrid);
  }
  line(r, x0, kMargin, x0, y0, kAxis);
  line(r, x0, y0, r.width - kMargin, y0, kAxis);
}

std::int64_t to_y(const Raster& r, double v, double lo, double hi) {
  const double t = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  const auto y0 = static_cast<double>(r.height - kMargin);
  return static_cast<std::int64_t>(std::lround(y0 - t * (y0 - kMargin)));
}

}  // namespace

Rgb series_color(std::size_t i) {
  static constexpr std::array<Rgb, 6> kPalette{
      {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}}};
  return kPalette[i % kPalette.size()];
}

Raster line_plot(const std::vector<std::vector<double>>& series, double y_min, double y_max, std::int64_t width,
                 std::int64_t height) {
  Raster r(width, height, 3, 255);
  frame(r);
  const auto plot_w = width - 2 * kMargin;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& v = series[s];
    const auto n = static_cast<std::int64_t>(v.size());
    auto to_x = [&](std::int64_t i) { return kMargin + (n > 1 ? plot_w * i / (n - 1) : plot_w / 2); };
    for (std::int64_t i = 0; i < n; ++i) {
      const auto vi = v[static_cast<std::size_t>(i)];
      if (std::isnan(vi)) continue;
      const auto x = to_x(i);
      const auto y = to_y(r, vi, y_min, y_max);
      if (i + 1 < n && !std::isnan(v[static_cast<std::size_t>(i + 1)]))
        line(r, x, y, to_x(i + 1), to_y(r, v[static_cast<std::size_t>(i + 1)], y_min, y_max), series_color(s));
      else
        put(r, x, y, series_color(s));
    }
  }
  return r;
}

Raster bar_plot(const std::vector<double>& values, const std::vector<double>& markers, double y_max,
                std::int64_t width, std::int64_t height) {
  if (!markers.empty() && markers.size() != values.size()) throw InvalidArgument("bar_plot: marker count mismatch");
  Raster r(width, height, 3, 255);
  frame(r);
  const auto n = static_cast<std::int64_t>(values.size());
  if (n == 0) return r;
  const auto plot_w = width - 2 * kMargin;
  const auto base = height - kMargin - 1;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto x0 = kMargin + 1 + plot_w * i / n;
    const auto x1 = std::max(x0, kMargin + plot_w * (i + 1) / n - 1);
    const auto top = to_y(r, values[static_cast<std::size_t>(i)], 0.0, y_max);
    for (auto x = x0; x <= x1; ++x) line(r, x, base, x, std::min(top, base), series_color(0));
    if (!markers.empty()) {
      const auto my = to_y(r, markers[static_cast<std::size_t>(i)], 0.0, y_max);
      line(r, x0, my, x1, my, series_color(3));
    }
  }
  return r;
}

Raster blend(const Raster& base, const Raster& overlay, double alpha) {
  if (base.width != overlay.width || base.height != overlay.height || base.channels != 3 || overlay.channels != 3)
    throw InvalidArgument("blend: rasters must be RGB of equal size");
  Raster out = base;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = (1.0 - alpha) * base.pixels[i] + alpha * overlay.pixels[i];
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return out;
}

}  // namespace lt3lssl::viz
