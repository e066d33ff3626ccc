#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace vpseg {

/// Target pixel count per phase. Counts are positive and sum to the pixel
/// count J (within 0.5).
class VolumeSpec {
 public:
  /// Accepts counts summing to J.
  static VolumeSpec from_counts(std::vector<double> counts, std::size_t pixels);

  /// Ratios summing to 1 (within 1e-6) are scaled to integer counts summing to
  /// J by largest-remainder rounding.
  static VolumeSpec from_ratios(std::span<const double> ratios, std::size_t pixels);

  /// Parses "35,65" (percent, sums to 100), "0.35,0.65" (ratios, sums to 1) or
  /// explicit counts summing to J. Throws std::invalid_argument otherwise.
  static VolumeSpec parse(std::string_view text, std::size_t pixels);

  std::span<const double> counts() const noexcept { return counts_; }
  std::size_t phases() const noexcept { return counts_.size(); }
  std::size_t pixels() const noexcept { return pixels_; }
  double operator[](std::size_t i) const { return counts_[i]; }
  double max() const;

 private:
  VolumeSpec(std::vector<double> counts, std::size_t pixels)
      : counts_(std::move(counts)), pixels_(pixels) {}

  std::vector<double> counts_;
  std::size_t pixels_ = 0;
};

/// Largest-remainder apportionment of total among the ratios.
std::vector<double> largest_remainder(std::span<const double> ratios, std::size_t total);

}  // namespace vpseg
