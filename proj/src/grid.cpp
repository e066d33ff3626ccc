#include "vpseg/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vpseg/kernels.hpp"

namespace vpseg {

void Image::validate() const {
  if (height == 0 || width == 0 || channels == 0) {
    throw std::invalid_argument("Image: empty dimensions");
  }
  if (data.size() != height * width * channels) {
    throw std::invalid_argument("Image: data size does not match dimensions");
  }
  for (double v : data) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("Image: value outside [0,1]: " + std::to_string(v));
    }
  }
}

ScalarGrid::ScalarGrid(std::size_t h, std::size_t w, std::vector<double> values)
    : height(h), width(w), data(std::move(values)) {
  if (data.size() != h * w) throw std::invalid_argument("ScalarGrid: size mismatch");
}

VectorGrid gradient(const ScalarGrid& u) {
  VectorGrid g(u.height, u.width);
  kernels::gradient(u.data, u.height, u.width, g.x, g.y);
  return g;
}

ScalarGrid divergence(const VectorGrid& q) {
  ScalarGrid d(q.height, q.width);
  kernels::divergence(q.x, q.y, q.height, q.width, d.data);
  return d;
}

double inner(const VectorGrid& a, const VectorGrid& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a.x[j] * b.x[j] + a.y[j] * b.y[j];
  return s;
}

double inner(const ScalarGrid& a, const ScalarGrid& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a.data[j] * b.data[j];
  return s;
}

namespace {

// Half-sample symmetric extension: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(n)) r = period - 1 - r;
  return static_cast<std::size_t>(r);
}

std::vector<double> gaussian_taps(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

}  // namespace

ScalarGrid gaussian_convolve(const ScalarGrid& g, double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("gaussian_convolve: negative sigma");
  if (sigma == 0.0) return g;

  const std::vector<double> taps = gaussian_taps(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t h = g.height;
  const std::size_t w = g.width;

  ScalarGrid tmp(h, w);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::size_t xs = reflect(static_cast<std::ptrdiff_t>(x) + k, w);
        s += taps[static_cast<std::size_t>(k + radius)] * g(static_cast<std::size_t>(y), xs);
      }
      tmp(static_cast<std::size_t>(y), x) = s;
    }
  }

  ScalarGrid out(h, w);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::size_t ys = reflect(y + k, h);
        s += taps[static_cast<std::size_t>(k + radius)] * tmp(ys, x);
      }
      out(static_cast<std::size_t>(y), x) = s;
    }
  }
  return out;
}

ScalarGrid channel_mean(const Image& h) {
  ScalarGrid out(h.height, h.width);
  for (std::size_t j = 0; j < h.pixels(); ++j) {
    double s = 0.0;
    for (double v : h.pixel(j)) s += v;
    out.data[j] = s / static_cast<double>(h.channels);
  }
  return out;
}

EdgeWeight edge_weight(const Image& h, double sharpness, double sigma) {
  if (!(sharpness >= 0.0)) throw std::invalid_argument("edge_weight: negative sharpness");
  EdgeWeight e{ScalarGrid(h.height, h.width, 1.0), sharpness, sigma};
  if (sharpness == 0.0) return e;

  const VectorGrid g = gradient(gaussian_convolve(channel_mean(h), sigma));
  for (std::size_t j = 0; j < e.grid.size(); ++j) {
    e.grid.data[j] = 1.0 / (1.0 + sharpness * std::hypot(g.x[j], g.y[j]));
  }
  return e;
}

EdgeWeight unit_edge_weight(std::size_t height, std::size_t width) {
  return EdgeWeight{ScalarGrid(height, width, 1.0), 0.0, 0.0};
}

}  // namespace vpseg
