#include "lt3lssl/data/synthetic.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/seed.hpp"

#include <array>
#include <cmath>

namespace lt3lssl::data {

namespace {

// 5x7 bitmap glyphs, one string per row.
constexpr std::array<std::array<const char*, 7>, 10> kGlyphs = {{
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},
}};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

enum class Shape { kDisk, kSquare, kTriangle, kRing, kCross };
enum class Texture { kHorizontal, kVertical, kDiagonal, kChecker, kDots };

bool inside(Shape s, double u, double v) {
  switch (s) {
    case Shape::kDisk: return u * u + v * v <= 1.0;
    case Shape::kSquare: return std::max(std::abs(u), std::abs(v)) <= 0.8;
    case Shape::kTriangle: return v >= -0.9 && v <= 0.8 && std::abs(u) <= (v + 0.9) / 1.7;
    case Shape::kRing: {
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.3;
    }
    case Shape::kCross:
      return (std::abs(u) <= 0.3 && std::abs(v) <= 0.95) || (std::abs(v) <= 0.3 && std::abs(u) <= 0.95);
  }
  return false;
}

bool texture_on(Texture t, double x, double y, double phase_x, double phase_y) {
  switch (t) {
    case Texture::kHorizontal: return static_cast<std::int64_t>(std::floor((y + phase_y) / 2.0)) % 2 == 0;
    case Texture::kVertical: return static_cast<std::int64_t>(std::floor((x + phase_x) / 2.0)) % 2 == 0;
    case Texture::kDiagonal: return static_cast<std::int64_t>(std::floor((x + y + phase_x) / 2.83)) % 2 == 0;
    case Texture::kChecker:
      return (static_cast<std::int64_t>(std::floor((x + phase_x) / 3.0)) +
              static_cast<std::int64_t>(std::floor((y + phase_y) / 3.0))) % 2 == 0;
    case Texture::kDots: {
      const double dx = std::fmod(x + phase_x, 4.0) - 1.5;
      const double dy = std::fmod(y + phase_y, 4.0) - 1.5;
      return dx * dx + dy * dy < 1.6;
    }
  }
  return false;
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - f * s);
  const double t = v * (1.0 - (1.0 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

constexpr std::int64_t kSide = 32;

struct Canvas {
  std::vector<float> px = std::vector<float>(3 * kSide * kSide, 0.0F);
  float& at(std::int64_t c, std::int64_t y, std::int64_t x) { return px[static_cast<std::size_t>((c * kSide + y) * kSide + x)]; }
};

struct ObjectStyle {
  Shape shape;
  Texture texture;
  std::array<double, 3> color_on;
  std::array<double, 3> color_off;
  double cx, cy, radius;
  double phase_x, phase_y;
};

void draw(Canvas& canvas, const ObjectStyle& o) {
  const auto x0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(o.cx - o.radius - 1)));
  const auto x1 = std::min<std::int64_t>(kSide - 1, static_cast<std::int64_t>(std::ceil(o.cx + o.radius + 1)));
  const auto y0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(o.cy - o.radius - 1)));
  const auto y1 = std::min<std::int64_t>(kSide - 1, static_cast<std::int64_t>(std::ceil(o.cy + o.radius + 1)));
  for (auto y = y0; y <= y1; ++y) {
    for (auto x = x0; x <= x1; ++x) {
      int hits = 0;
      for (double sy : {0.25, 0.75}) {
        for (double sx : {0.25, 0.75}) {
          if (inside(o.shape, (x + sx - o.cx) / o.radius, (y + sy - o.cy) / o.radius)) ++hits;
        }
      }
      if (hits == 0) continue;
      const double alpha = hits / 4.0;
      const auto& col = texture_on(o.texture, x, y, o.phase_x, o.phase_y) ? o.color_on : o.color_off;
      for (std::int64_t c = 0; c < 3; ++c) {
        auto& p = canvas.at(c, y, x);
        p = static_cast<float>(alpha * col[static_cast<std::size_t>(c)] + (1.0 - alpha) * p);
      }
    }
  }
}

}  // namespace

LabeledImageSet synthetic_digits(std::int64_t per_class, std::uint64_t seed, const SyntheticDigitOptions& options) {
  if (per_class < 1) throw InvalidArgument("per_class must be positive");
  constexpr std::int64_t kDigitSide = 28;
  const std::int64_t n = 10 * per_class;
  auto images = torch::zeros({n, 1, kDigitSide, kDigitSide}, torch::kFloat32);
  auto acc = images.accessor<float, 4>();
  LabeledImageSet out;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t digit = i % 10;
    auto rng = make_rng({seed, tag(Stream::kSynthetic), 0xD161, static_cast<std::uint64_t>(i)});
    const double sx = uniform(rng, 2.6, 3.2);
    const double sy = uniform(rng, 2.6, 3.0);
    const double ox = (kDigitSide - 5 * sx) / 2.0 + uniform(rng, -2.0, 2.0);
    const double oy = (kDigitSide - 7 * sy) / 2.0 + uniform(rng, -2.0, 2.0);
    const double ink = uniform(rng, 0.75, 1.0);
    std::normal_distribution<double> noise(0.0, options.noise);
    const auto& glyph = kGlyphs[static_cast<std::size_t>(digit)];
    for (std::int64_t y = 0; y < kDigitSide; ++y) {
      for (std::int64_t x = 0; x < kDigitSide; ++x) {
        int hits = 0;
        for (double dy : {0.25, 0.75}) {
          for (double dx : {0.25, 0.75}) {
            const auto u = static_cast<std::int64_t>(std::floor((x + dx - ox) / sx));
            const auto v = static_cast<std::int64_t>(std::floor((y + dy - oy) / sy));
            if (u >= 0 && u < 5 && v >= 0 && v < 7 && glyph[static_cast<std::size_t>(v)][u] == '1') ++hits;
          }
        }
        const double value = ink * hits / 4.0 + (options.noise > 0.0 ? noise(rng) : 0.0);
        acc[i][0][y][x] = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
    out.labels.push_back(digit);
    out.sample_ids.push_back(i);
  }
  out.images = images;
  return out;
}

LabeledImageSet synthetic_objects(std::int64_t num_classes, std::int64_t per_class, std::uint64_t seed,
                                  const SyntheticObjectOptions& options) {
  if (num_classes < 1 || num_classes > 100) throw InvalidArgument("synthetic objects support 1..100 classes");
  if (per_class < 1) throw InvalidArgument("per_class must be positive");
  const std::int64_t n = num_classes * per_class;
  auto images = torch::empty({n, 3, kSide, kSide}, torch::kFloat32);
  LabeledImageSet out;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t k = i % num_classes;
    auto rng = make_rng({seed, tag(Stream::kSynthetic), 0x0B1E, static_cast<std::uint64_t>(i)});
    Canvas canvas;

    // Background: low-saturation vertical gradient.
    const auto top = hsv_to_rgb(uniform(rng, 0, 1), uniform(rng, 0.0, 0.35), uniform(rng, 0.2, 0.9));
    const auto bottom = hsv_to_rgb(uniform(rng, 0, 1), uniform(rng, 0.0, 0.35), uniform(rng, 0.2, 0.9));
    for (std::int64_t y = 0; y < kSide; ++y) {
      const double t = static_cast<double>(y) / (kSide - 1);
      for (std::int64_t x = 0; x < kSide; ++x) {
        for (std::int64_t c = 0; c < 3; ++c) {
          canvas.at(c, y, x) = static_cast<float>((1 - t) * top[static_cast<std::size_t>(c)] + t * bottom[static_cast<std::size_t>(c)]);
        }
      }
    }

    auto random_style = [&](Shape shape, Texture texture, double hue, double radius) {
      ObjectStyle o{};
      o.shape = shape;
      o.texture = texture;
      const double s = uniform(rng, 0.5, 1.0);
      const double v = uniform(rng, 0.6, 1.0);
      o.color_on = hsv_to_rgb(hue, s, v);
      o.color_off = hsv_to_rgb(hue + uniform(rng, -0.05, 0.05), s, v * uniform(rng, 0.15, 0.45));
      o.radius = radius;
      o.cx = uniform(rng, radius * 0.6, kSide - radius * 0.6);
      o.cy = uniform(rng, radius * 0.6, kSide - radius * 0.6);
      o.phase_x = uniform(rng, 0.0, 4.0);
      o.phase_y = uniform(rng, 0.0, 4.0);
      return o;
    };

    for (std::int64_t d = 0; d < options.distractors; ++d) {
      const auto shape = static_cast<Shape>(std::uniform_int_distribution<int>(0, 4)(rng));
      const auto texture = static_cast<Texture>(std::uniform_int_distribution<int>(0, 4)(rng));
      draw(canvas, random_style(shape, texture, uniform(rng, 0, 1), uniform(rng, 2.5, 4.5)));
    }

    // Class attributes: shape, texture and (for more than 25 classes) a hue family.
    const auto shape = static_cast<Shape>(k % 5);
    const auto texture = static_cast<Texture>((k / 5) % 5);
    const double hue = num_classes > 25 ? 0.25 * static_cast<double>((k / 25) % 4) + uniform(rng, -0.06, 0.06)
                                        : uniform(rng, 0.0, 1.0);
    draw(canvas, random_style(shape, texture, hue, uniform(rng, options.min_size, options.max_size) / 2.0));

    std::normal_distribution<double> noise(0.0, options.noise);
    for (auto& p : canvas.px) p = static_cast<float>(std::clamp(p + (options.noise > 0.0 ? noise(rng) : 0.0), 0.0, 1.0));
    images[i].copy_(torch::from_blob(canvas.px.data(), {3, kSide, kSide}, torch::kFloat32));
    out.labels.push_back(k);
    out.sample_ids.push_back(i);
  }
  out.images = images;
  return out;
}

}  // namespace lt3lssl::data
