#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vpseg {

/// Multichannel image with interleaved channels, values normalized to [0, 1].
/// Pixel j = y * width + x.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  std::size_t pixels() const noexcept { return height * width; }
  double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return data[(y * width + x) * channels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return data[(y * width + x) * channels + c];
  }
  std::span<const double> pixel(std::size_t j) const {
    return {data.data() + j * channels, channels};
  }

  /// Throws if dimensions are empty or any value is outside [0, 1].
  void validate() const;
};

struct ScalarGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  ScalarGrid() = default;
  ScalarGrid(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), data(h * w, fill) {}
  ScalarGrid(std::size_t h, std::size_t w, std::vector<double> values);

  std::size_t size() const noexcept { return data.size(); }
  double& operator()(std::size_t y, std::size_t x) { return data[y * width + x]; }
  double operator()(std::size_t y, std::size_t x) const { return data[y * width + x]; }
};

/// Two-component field stored as separate x and y planes.
struct VectorGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> x;
  std::vector<double> y;

  VectorGrid() = default;
  VectorGrid(std::size_t h, std::size_t w)
      : height(h), width(w), x(h * w, 0.0), y(h * w, 0.0) {}

  std::size_t size() const noexcept { return x.size(); }
};

/// Forward differences with Neumann boundary: the last column (row) has a
/// zero x (y) component.
VectorGrid gradient(const ScalarGrid& u);

/// Backward differences; exact negative adjoint of gradient().
ScalarGrid divergence(const VectorGrid& q);

/// <grad u, q> and <u, div q> summed over the grid.
double inner(const VectorGrid& a, const VectorGrid& b);
double inner(const ScalarGrid& a, const ScalarGrid& b);

/// Separable truncated Gaussian (radius ceil(3 sigma)), normalized, with
/// half-sample symmetric boundary extension. sigma == 0 is the identity.
ScalarGrid gaussian_convolve(const ScalarGrid& g, double sigma);

/// Channel mean of an image as a scalar grid.
ScalarGrid channel_mean(const Image& h);

struct EdgeWeight {
  ScalarGrid grid;
  double sharpness = 0.0;
  double sigma = 0.0;
};

/// e(x) = 1 / (1 + sharpness * |grad(k_sigma * mean(h))(x)|), computed once from
/// the input image.
EdgeWeight edge_weight(const Image& h, double sharpness, double sigma);

/// All-ones weight for a grid of the given shape.
EdgeWeight unit_edge_weight(std::size_t height, std::size_t width);

}  // namespace vpseg
