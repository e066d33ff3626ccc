#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vpseg/grid.hpp"
#include "vpseg/matrix.hpp"

namespace vpseg {

inline constexpr double kCovarianceFloor = 1e-6;

/// Per-phase Gaussian statistics: mean, covariance and mixture weight.
struct PhaseStats {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  std::vector<double> weights;

  std::size_t phases() const noexcept { return means.size(); }
  std::size_t channels() const noexcept { return means.empty() ? 0 : means.front().size(); }

  /// Identity covariances and uniform weights around the given means.
  static PhaseStats from_means(std::vector<Eigen::VectorXd> means);
};

/// Lloyd's algorithm with seeded k-means++ initialization. Empty clusters are
/// repaired by splitting the largest cluster (its farthest member becomes the
/// new center). Phases are returned in ascending order of channel-mean
/// intensity; covariances are identity and weights uniform.
PhaseStats kmeans_init(const Image& h, std::size_t phases, std::uint64_t seed,
                       std::size_t max_iter = 100);

/// C(i, j) = |h(x_j) - m_i|^2.
CostVolume scalar_cost(const Image& h, const PhaseStats& stats);

/// C(i, j) = (h(x_j) - m_i)^T Sigma_i^{-1} (h(x_j) - m_i). Throws
/// std::domain_error naming the phase when a covariance is singular.
CostVolume mahalanobis_cost(const Image& h, const PhaseStats& stats);

/// C(i, j) = -log(alpha_i p_i(h(x_j))) shifted per column so that each
/// column minimum is 0. p_i is the Gaussian density N(m_i, Sigma_i).
CostVolume emtv_cost(const Image& h, const PhaseStats& stats);

/// Weighted means, covariances (plus kCovarianceFloor * I) and mixture
/// weights from a soft assignment u (phases x pixels, columns summing to 1).
/// A phase whose total mass is below min_mass keeps its entry from previous.
PhaseStats update_statistics(const Image& h, const Matrix& u, const PhaseStats& previous,
                             double min_mass = 1e-8);

/// One-hot nearest-mean assignment (squared distance, lowest index on ties).
Matrix hard_assignment(const Image& h, const PhaseStats& stats);

/// Plain-text key=value serialization.
void save_stats(const std::filesystem::path& path, const PhaseStats& stats);
PhaseStats load_stats(const std::filesystem::path& path);

}  // namespace vpseg
