#include "vpseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace vpseg {

std::vector<double> largest_remainder(std::span<const double> ratios, std::size_t total) {
  std::vector<double> counts(ratios.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double exact = ratios[i] * static_cast<double>(total);
    const double base = std::floor(exact);
    counts[i] = base;
    assigned += static_cast<std::size_t>(base);
    rem.emplace_back(exact - base, i);
  }
  // Larger remainder first, lower index on ties.
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < rem.size(); ++k, ++assigned) {
    counts[rem[k].second] += 1.0;
  }
  return counts;
}

VolumeSpec VolumeSpec::from_counts(std::vector<double> counts, std::size_t pixels) {
  if (counts.size() < 1) throw std::invalid_argument("volume: no phases given");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(counts[i] > 0.0) || !std::isfinite(counts[i])) {
      throw std::invalid_argument("volume: phase " + std::to_string(i) +
                                  " must have a positive volume");
    }
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (std::abs(total - static_cast<double>(pixels)) > 0.5) {
    throw std::invalid_argument("volume: counts sum to " + std::to_string(total) +
                                " but the image has " + std::to_string(pixels) + " pixels");
  }
  return VolumeSpec(std::move(counts), pixels);
}

VolumeSpec VolumeSpec::from_ratios(std::span<const double> ratios, std::size_t pixels) {
  const double total = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("volume: ratios sum to " + std::to_string(total) +
                                ", expected 1 (or 100 percent)");
  }
  return from_counts(largest_remainder(ratios, pixels), pixels);
}

VolumeSpec VolumeSpec::parse(std::string_view text, std::size_t pixels) {
  std::vector<double> values;
  std::stringstream ss{std::string(text)};
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("volume: cannot parse '" + tok + "'");
    }
  }
  if (values.empty()) throw std::invalid_argument("volume: empty specification");
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (std::abs(total - 100.0) <= 1e-6 * 100.0) {
    for (double& v : values) v /= 100.0;
    return from_ratios(values, pixels);
  }
  if (std::abs(total - 1.0) <= 1e-6) return from_ratios(values, pixels);
  if (std::abs(total - static_cast<double>(pixels)) <= 0.5) {
    return from_counts(std::move(values), pixels);
  }
  throw std::invalid_argument("volume: values sum to " + std::to_string(total) +
                              "; expected 100 (percent), 1 (ratios) or " +
                              std::to_string(pixels) + " (pixel counts)");
}

double VolumeSpec::max() const { return *std::max_element(counts_.begin(), counts_.end()); }

}  // namespace vpseg
