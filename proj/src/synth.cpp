#include "vpseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace vpseg {

namespace {

double sq(double v) { return v * v; }

bool in_ellipse(double x, double y, double cx, double cy, double rx, double ry, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double dx = x - cx;
  const double dy = y - cy;
  const double u = (c * dx + s * dy) / rx;
  const double v = (-s * dx + c * dy) / ry;
  return u * u + v * v <= 1.0;
}

// Horse-like silhouette in unit coordinates (y grows downwards).
bool in_horse(double x, double y) {
  const double pi = std::numbers::pi;
  if (in_ellipse(x, y, 0.50, 0.48, 0.25, 0.12, 0.0)) return true;            // body
  if (in_ellipse(x, y, 0.73, 0.33, 0.06, 0.15, pi / 5)) return true;         // neck
  if (in_ellipse(x, y, 0.81, 0.22, 0.09, 0.05, pi / 8)) return true;         // head
  if (in_ellipse(x, y, 0.26, 0.47, 0.10, 0.03, -pi / 5)) return true;        // tail
  for (double lx : {0.32, 0.40, 0.60, 0.68}) {
    if (std::abs(x - lx) < 0.025 && y > 0.52 && y < 0.85) return true;       // legs
  }
  return false;
}

}  // namespace

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "circle") return SynthKind::circle;
  if (name == "two-region") return SynthKind::two_region;
  if (name == "three-level") return SynthKind::three_level;
  if (name == "horse") return SynthKind::horse;
  throw std::invalid_argument("unknown synthetic kind '" + std::string(name) +
                              "' (expected circle, two-region, three-level or horse)");
}

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::circle:
      return "circle";
    case SynthKind::two_region:
      return "two-region";
    case SynthKind::three_level:
      return "three-level";
    case SynthKind::horse:
      return "horse";
  }
  return "circle";
}

double circle_radius(std::size_t size) {
  return std::sqrt(0.65 / std::numbers::pi) * static_cast<double>(size);
}

SynthImage make_synthetic(SynthKind kind, std::size_t size, double noise_variance,
                          std::uint64_t seed) {
  if (size < 16) throw std::invalid_argument("synthetic image size must be at least 16");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise variance must be nonnegative");
  const std::size_t n = size;
  const double nd = static_cast<double>(n);
  SynthImage s;
  s.image = Image(n, n, 1);
  s.truth = LabelMap{n, n, std::vector<int>(n * n, 0)};
  s.phases = kind == SynthKind::three_level ? 3 : 2;

  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      // Pixel centers in grid units and in [0, 1].
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      const double ux = px / nd;
      const double uy = py / nd;
      double value = 0.0;
      int lab = 0;
      switch (kind) {
        case SynthKind::circle: {
          const double r = circle_radius(n);
          if (sq(px - nd / 2) + sq(py - nd / 2) <= r * r) {
            lab = 1;
            value = 0.55 + 0.45 * ux;
          }
          break;
        }
        case SynthKind::two_region:
          if (ux > 0.25 && ux < 0.75 && uy > 0.3 && uy < 0.8) {
            lab = 1;
            value = 0.7;
          } else {
            value = 0.3;
          }
          break;
        case SynthKind::three_level:
          value = 0.1;
          if (ux > 0.1 && ux < 0.45 && uy > 0.1 && uy < 0.9) {
            lab = 1;
            value = 0.5;
          }
          if (sq(ux - 0.7) + sq(uy - 0.5) <= sq(0.2)) {
            lab = 2;
            value = 0.9;
          }
          break;
        case SynthKind::horse:
          if (in_horse(ux, uy)) {
            lab = 1;
            value = 0.62 + 0.08 * std::sin(12.0 * ux) * std::cos(9.0 * uy);
          } else {
            value = 0.35 + 0.05 * std::cos(7.0 * ux + 3.0 * uy);
          }
          break;
      }
      s.image.at(y, x) = value;
      s.truth.labels[y * n + x] = lab;
    }
  }

  if (noise_variance > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
    for (double& v : s.image.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
  }
  return s;
}

OtInstance fig1_instance() {
  OtInstance p;
  p.a = {2.0, 5.0, 3.0};
  p.b.assign(10, 1.0);
  p.c = Matrix(3, 10);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      p.c(i, j) = sq(2.0 * static_cast<double>(i + 1) - static_cast<double>(j + 1));
    }
  }
  return p;
}

}  // namespace vpseg
