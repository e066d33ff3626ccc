#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "vpseg/grid.hpp"
#include "vpseg/matrix.hpp"
#include "vpseg/segmenter.hpp"

namespace vpseg {

enum class SynthKind {
  circle,       ///< black background, disc covering ~65% with a horizontal intensity ramp
  two_region,   ///< dark background, brighter rectangle
  three_level,  ///< three constant levels: background, square, disc
  horse,        ///< two-phase silhouette built from ellipses, mildly textured
};

SynthKind parse_synth_kind(std::string_view name);
std::string_view to_string(SynthKind kind);

struct SynthImage {
  Image image;     ///< one channel, values in [0, 1]
  LabelMap truth;  ///< 0 is background, higher labels are brighter regions
  std::size_t phases = 2;
};

/// Deterministic for a given seed. Gaussian noise of the given variance is
/// added and the result is clipped to [0, 1]. Throws std::invalid_argument
/// when size < 16 or the variance is negative.
SynthImage make_synthetic(SynthKind kind, std::size_t size, double noise_variance,
                          std::uint64_t seed);

/// Radius of the circle image: the disc covers 65% of a size x size grid.
double circle_radius(std::size_t size);

/// Small transport instance: a = (2, 5, 3), b = ones(10), C(i, j) = (2i - j)^2
/// with 1-based i and j.
struct OtInstance {
  std::vector<double> a;
  std::vector<double> b;
  Matrix c;
};
OtInstance fig1_instance();

}  // namespace vpseg
