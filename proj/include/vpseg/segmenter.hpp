#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vpseg/grid.hpp"
#include "vpseg/matrix.hpp"
#include "vpseg/ot.hpp"
#include "vpseg/similarity.hpp"
#include "vpseg/volume.hpp"

namespace vpseg {

/// Phase-by-pixel probabilities on an image grid; every column sums to 1.
struct SoftSegmentation {
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix u;

  std::size_t phases() const noexcept { return u.rows(); }
  std::size_t pixels() const noexcept { return u.cols(); }
  ScalarGrid phase(std::size_t i) const;
};

/// One TV dual vector field per phase.
struct TVDualField {
  std::vector<VectorGrid> q;

  static TVDualField zeros(std::size_t phases, std::size_t height, std::size_t width);
  std::size_t phases() const noexcept { return q.size(); }
};

/// Per-pixel phase index in [0, phases).
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

enum class CostKind { scalar, mahalanobis, emtv };

CostKind parse_cost_kind(std::string_view name);
std::string_view to_string(CostKind kind);

struct SegParams {
  double eps = 0.01;
  double lambda = 0.05;
  std::optional<double> tau_q;  ///< defaults to 0.5 * eps
  std::size_t max_outer = 1000;
  double tol_u = 1e-3;  ///< on |u^{t+1} - u^t|_F / sqrt(J)
  std::size_t n_f_inner = 1;
  VolumeSolver volume_solver = VolumeSolver::stabilized;
  std::size_t refresh_interval = 0;  ///< similarity refresh period; 0 = never
  bool update_q = true;              ///< false freezes the TV dual at zero
  CostKind cost = CostKind::scalar;
  double edge_sharpness = 0.0;  ///< 0 gives e == 1
  double edge_sigma = 1.0;
  std::size_t kmeans_iter = 100;

  double step_q() const { return tau_q.value_or(0.5 * eps); }
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Ablation presets matching the model relationships: which of boundary
/// smoothness, entropy and volume preservation are active.
enum class Method {
  potts,     ///< TV, near-zero entropy, no volume
  emtv,      ///< TV, eps = 1, Gaussian negative log-likelihood cost, no volume
  bae,       ///< TV with entropy, no volume
  proposed,  ///< TV, entropy and volume
};

/// Returns params adjusted for the preset and whether volume is used.
std::pair<SegParams, bool> apply_method(SegParams params, Method method);

struct TraceRow {
  std::size_t iteration = 0;
  double residual = 0.0;
  std::vector<double> rowsum_error;  ///< rows(u) - V per phase; empty without volume
  double dual_objective = 0.0;
};

struct SegmentResult {
  SoftSegmentation u;
  LabelMap labels;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::size_t iterations = 0;
  PhaseStats stats;
  CostVolume cost;
  TVDualField q;
  std::vector<double> f;
};

/// Radial projection of every q_i(x) onto the disc of radius lambda * e(x).
TVDualField project_q(TVDualField q, double lambda, const EdgeWeight& e);

/// q_i <- Proj(q_i - tau grad u_i).
TVDualField update_q(TVDualField q, const SoftSegmentation& u, double tau, double lambda,
                     const EdgeWeight& e);

/// K = C + div q, phase by phase.
Matrix assemble_cost(const CostVolume& c, const TVDualField& q);

/// u_i = softmax_i((-c_i - div q_i + f_i) / eps).
SoftSegmentation softmax_step(const CostVolume& c, const TVDualField& q,
                              std::span<const double> f, double eps, std::size_t height,
                              std::size_t width);

/// n_inner volume-dual updates with K = C + div q.
std::vector<double> volume_step(const CostVolume& c, const TVDualField& q,
                                std::span<const double> f, const VolumeSpec& volume, double eps,
                                std::size_t n_inner,
                                VolumeSolver solver = VolumeSolver::stabilized);

/// The alternating loop on a precomputed cost volume (no similarity refresh).
SegmentResult segment_costs(const CostVolume& c, std::size_t height, std::size_t width,
                            const std::optional<VolumeSpec>& volume, const SegParams& params,
                            const EdgeWeight& edge);

/// Full pipeline: k-means statistics, cost, edge weight, alternating loop,
/// optional similarity refresh, labels.
SegmentResult segment(const Image& h, std::size_t phases, const std::optional<VolumeSpec>& volume,
                      const SegParams& params, std::uint64_t seed);

/// Cost volume for the chosen kind (covariances from a hard k-means split
/// when the kind needs them).
CostVolume build_cost(const Image& h, const PhaseStats& stats, CostKind kind);

/// Per-pixel argmax, lowest index on ties.
LabelMap label(const SoftSegmentation& u);

struct DiceScores {
  double overlap_ratio = 0.0;  ///< |pred & truth| / |pred|
  double symmetric = 0.0;    ///< 2 |pred & truth| / (|pred| + |truth|)
  bool empty_prediction = false;
};

DiceScores dice(const LabelMap& pred, const LabelMap& truth, int phase);

/// Fraction of pixels with matching labels.
double pixel_accuracy(const LabelMap& pred, const LabelMap& truth);

/// Mean over pixels of max_i u_i(x); 1 for a binary segmentation.
double mean_max_probability(const SoftSegmentation& u);

/// Labels from a gray-level ground-truth image: distinct levels in ascending
/// order become labels 0, 1, ...
LabelMap labels_from_image(const Image& img);

/// Gray image with phase i at level i / (phases - 1).
Image labels_to_gray(const LabelMap& labels, std::size_t phases);

/// RGB image using the fixed 21-color palette.
Image labels_to_palette(const LabelMap& labels);

}  // namespace vpseg
