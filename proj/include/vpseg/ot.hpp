#pragma once

// Entropic optimal transport between phase volumes and pixels.
//
// Conventions: K is an I x J cost (similarity plus TV divergence), f is the
// volume dual (length I), g the pixel dual (length J). The primal problem is
//   min_u <u, K> + eps * sum u log u   s.t. rows(u) = V, cols(u) = 1,
// whose dual is
//   max_{f,g} <f, V> + <g, 1> - eps * sum_ij exp((f_i + g_j - K_ij) / eps - 1).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "vpseg/matrix.hpp"
#include "vpseg/volume.hpp"

namespace vpseg {

/// Raised when a log-domain iteration produces non-finite potentials.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// -eps * log sum_i exp(-z_i / eps - 1), evaluated with min-subtraction.
double softmin_eps(std::span<const double> z, double eps);

/// eps * log sum_i exp(z_i / eps), evaluated with max-subtraction.
double softmax_eps(std::span<const double> z, double eps);

/// g_j = softmin_eps(K(., j) - f): the maximizer of the dual in g for fixed f.
std::vector<double> c_transform_f(std::span<const double> f, const Matrix& k, double eps);

/// f_i = eps log V_i + softmin_eps(K(i, .) - g): the maximizer in f for fixed g.
std::vector<double> cbar_transform_g(std::span<const double> g, const Matrix& k,
                                     std::span<const double> volume, double eps);

/// n_inner stabilized volume-dual updates
///   f_i <- f_i + eps * (log V_i - log sum_j u_ij(f)),
/// where u(f) is the column softmax of (f - K) / eps. Each update equals one
/// pair of exact c-transforms. Throws NumericalError on non-finite f.
std::vector<double> sinkhorn_volume(const Matrix& k, const VolumeSpec& volume,
                                    std::span<const double> f0, double eps, std::size_t n_inner);

enum class VolumeSolver {
  stabilized,  ///< repeated stabilized updates only
  newton,      ///< Newton steps on the concave dual in f, with line search
};

struct VolumeSolveOptions {
  VolumeSolver method = VolumeSolver::newton;
  std::size_t max_iter = 500;
  double tol = 1e-6;  ///< on |rows(u) - V|_inf / max V
};

struct VolumeSolveResult {
  std::vector<double> f;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Iterates the volume dual until the row-sum residual is below tol.
VolumeSolveResult solve_volume_dual(const Matrix& k, const VolumeSpec& volume,
                                    std::span<const double> f0, double eps,
                                    const VolumeSolveOptions& options = {});

/// One Newton step on the dual in f (falls back to a stabilized update when
/// the line search fails). Exposed for the segmentation loop.
std::vector<double> newton_volume_step(const Matrix& k, const VolumeSpec& volume,
                                       std::span<const double> f, double eps);

/// u_ij = exp((f_i - K_ij) / eps) / sum_l exp((f_l - K_lj) / eps).
Coupling recover_coupling(const Matrix& k, std::span<const double> f, double eps);

/// <f, V> + <g, 1> - eps * sum exp((f_i + g_j - K_ij) / eps - 1).
double dual_objective(std::span<const double> f, std::span<const double> g, const Matrix& k,
                      std::span<const double> volume, double eps);

/// <u, K> + eps * sum u log u (0 log 0 = 0).
double primal_objective(const Coupling& u, const Matrix& k, double eps);

/// |rows(u) - V|_inf / max V.
double row_sum_residual(const Coupling& u, std::span<const double> volume);

/// Transport cost <u, C>.
double coupling_cost(const Coupling& u, const Matrix& c);

/// Discrete entropy H(u) = -sum u log u.
double coupling_entropy(const Coupling& u);

struct EntropicOtOptions {
  double tol = 1e-9;  ///< absolute, on both marginals
  std::size_t max_iter = 200000;
  /// Solve a decreasing sequence of eps values first, warm-starting the duals.
  bool eps_scaling = true;
};

struct EntropicOtResult {
  Coupling coupling;
  std::vector<double> f;
  std::vector<double> g;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Two-sided log-domain Sinkhorn for min <u, C> - eps H(u) over couplings of
/// a and b. Zero-mass bins get zero rows/columns. Throws std::invalid_argument
/// when the masses differ by more than 1e-9 relative.
EntropicOtResult entropic_ot(std::span<const double> a, std::span<const double> b,
                             const Matrix& c, double eps, const EntropicOtOptions& options = {});

}  // namespace vpseg
