#include "vpseg/ot.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vpseg/kernels.hpp"

namespace vpseg {

namespace {

void require_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("eps must be positive and finite, got " + std::to_string(eps));
  }
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(what) + ": non-finite potential");
  }
}

void check_volume(const Matrix& k, std::span<const double> volume) {
  if (volume.size() != k.rows()) {
    throw std::invalid_argument("volume length does not match the number of phases");
  }
  for (double v : volume) {
    if (!(v > 0.0)) throw std::invalid_argument("volume entries must be positive");
  }
}

double sum_in_order(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Dual in f after eliminating g: <f, V> - eps * sum_j lse_j(f).
double reduced_dual(std::span<const double> f, std::span<const double> volume,
                    std::span<const double> lse, double eps) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * volume[i];
  return s - eps * sum_in_order(lse);
}

std::vector<double> stabilized_update(const Matrix& k, std::span<const double> volume,
                                      std::span<const double> f, double eps,
                                      std::vector<double>& lse) {
  kernels::column_lse(k, f, eps, lse);
  const std::vector<double> log_rows = kernels::row_lse(k, f, lse, eps);
  std::vector<double> next(f.begin(), f.end());
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] += eps * (std::log(volume[i]) - log_rows[i]);
  }
  return next;
}

double residual_from_rows(std::span<const double> rows, std::span<const double> volume) {
  double worst = 0.0;
  double vmax = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    worst = std::max(worst, std::abs(rows[i] - volume[i]));
    vmax = std::max(vmax, volume[i]);
  }
  return worst / vmax;
}

double current_residual(const Matrix& k, std::span<const double> volume,
                        std::span<const double> f, double eps, std::vector<double>& lse) {
  kernels::column_lse(k, f, eps, lse);
  std::vector<double> rows = kernels::row_lse(k, f, lse, eps);
  for (double& r : rows) r = std::exp(r);
  return residual_from_rows(rows, volume);
}

}  // namespace

double softmin_eps(std::span<const double> z, double eps) {
  require_eps(eps);
  if (z.empty()) throw std::invalid_argument("softmin_eps: empty vector");
  const double lo = *std::min_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(-(v - lo) / eps);
  return lo + eps - eps * std::log(s);
}

double softmax_eps(std::span<const double> z, double eps) {
  require_eps(eps);
  if (z.empty()) throw std::invalid_argument("softmax_eps: empty vector");
  const double hi = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp((v - hi) / eps);
  return hi + eps * std::log(s);
}

std::vector<double> c_transform_f(std::span<const double> f, const Matrix& k, double eps) {
  require_eps(eps);
  if (f.size() != k.rows()) throw std::invalid_argument("c_transform_f: size mismatch");
  std::vector<double> g(k.cols());
  kernels::column_lse(k, f, eps, g);
  for (double& v : g) v = -eps * (v - 1.0);
  return g;
}

std::vector<double> cbar_transform_g(std::span<const double> g, const Matrix& k,
                                     std::span<const double> volume, double eps) {
  require_eps(eps);
  check_volume(k, volume);
  if (g.size() != k.cols()) throw std::invalid_argument("cbar_transform_g: size mismatch");
  std::vector<double> offset(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) offset[j] = -g[j] / eps;
  const std::vector<double> zeros(k.rows(), 0.0);
  std::vector<double> f = kernels::row_lse(k, zeros, offset, eps);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = eps * std::log(volume[i]) - eps * (f[i] - 1.0);
  }
  return f;
}

std::vector<double> sinkhorn_volume(const Matrix& k, const VolumeSpec& volume,
                                    std::span<const double> f0, double eps,
                                    std::size_t n_inner) {
  require_eps(eps);
  check_volume(k, volume.counts());
  if (f0.size() != k.rows()) throw std::invalid_argument("sinkhorn_volume: f0 size mismatch");
  if (n_inner == 0) throw std::invalid_argument("sinkhorn_volume: n_inner must be >= 1");
  std::vector<double> f(f0.begin(), f0.end());
  std::vector<double> lse(k.cols());
  for (std::size_t t = 0; t < n_inner; ++t) {
    f = stabilized_update(k, volume.counts(), f, eps, lse);
    require_finite(f, "sinkhorn_volume");
  }
  return f;
}

std::vector<double> newton_volume_step(const Matrix& k, const VolumeSpec& volume,
                                       std::span<const double> f, double eps) {
  require_eps(eps);
  const std::span<const double> v = volume.counts();
  check_volume(k, v);
  const std::size_t phases = k.rows();
  const std::size_t pixels = k.cols();

  Matrix u;
  std::vector<double> lse(pixels);
  kernels::gibbs_columns(k, f, eps, u, lse);
  const std::vector<double> rows = kernels::row_sums(u);

  Eigen::VectorXd grad(static_cast<Eigen::Index>(phases));
  for (std::size_t i = 0; i < phases; ++i) grad(static_cast<Eigen::Index>(i)) = v[i] - rows[i];

  // Negative Hessian of the reduced dual: (diag(rows) - sum_j u_j u_j^T) / eps.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(phases),
                                            static_cast<Eigen::Index>(phases));
  for (std::size_t a = 0; a < phases; ++a) {
    for (std::size_t b = a; b < phases; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < pixels; ++j) s += u(a, j) * u(b, j);
      h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = -s;
      h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = -s;
    }
    h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += rows[a];
  }
  h /= eps;
  // The reduced dual is invariant along the all-ones direction; pin it.
  const double pin = std::max(h.diagonal().mean(), std::numeric_limits<double>::min());
  h.array() += pin / static_cast<double>(phases);

  const Eigen::VectorXd dir = h.ldlt().solve(grad);
  const double phi0 = reduced_dual(f, v, lse, eps);
  const double slope = grad.dot(dir);

  std::vector<double> trial(phases);
  std::vector<double> trial_lse(pixels);
  if (dir.allFinite() && slope > 0.0) {
    for (double step = 1.0; step > 1e-8; step *= 0.5) {
      for (std::size_t i = 0; i < phases; ++i) {
        trial[i] = f[i] + step * dir(static_cast<Eigen::Index>(i));
      }
      kernels::column_lse(k, trial, eps, trial_lse);
      const double phi = reduced_dual(trial, v, trial_lse, eps);
      if (std::isfinite(phi) && phi >= phi0 + 1e-4 * step * slope) return trial;
    }
  }
  std::vector<double> next = stabilized_update(k, v, f, eps, trial_lse);
  require_finite(next, "newton_volume_step");
  return next;
}

VolumeSolveResult solve_volume_dual(const Matrix& k, const VolumeSpec& volume,
                                    std::span<const double> f0, double eps,
                                    const VolumeSolveOptions& options) {
  require_eps(eps);
  check_volume(k, volume.counts());
  if (f0.size() != k.rows()) throw std::invalid_argument("solve_volume_dual: f0 size mismatch");
  VolumeSolveResult r;
  r.f.assign(f0.begin(), f0.end());
  std::vector<double> lse(k.cols());
  r.residual = current_residual(k, volume.counts(), r.f, eps, lse);
  while (r.residual > options.tol && r.iterations < options.max_iter) {
    if (options.method == VolumeSolver::newton) {
      r.f = newton_volume_step(k, volume, r.f, eps);
    } else {
      r.f = stabilized_update(k, volume.counts(), r.f, eps, lse);
    }
    require_finite(r.f, "solve_volume_dual");
    ++r.iterations;
    r.residual = current_residual(k, volume.counts(), r.f, eps, lse);
  }
  r.converged = r.residual <= options.tol;
  return r;
}

Coupling recover_coupling(const Matrix& k, std::span<const double> f, double eps) {
  require_eps(eps);
  if (f.size() != k.rows()) throw std::invalid_argument("recover_coupling: size mismatch");
  Coupling u;
  kernels::gibbs_columns(k, f, eps, u);
  return u;
}

double dual_objective(std::span<const double> f, std::span<const double> g, const Matrix& k,
                      std::span<const double> volume, double eps) {
  require_eps(eps);
  if (f.size() != k.rows() || g.size() != k.cols() || volume.size() != k.rows()) {
    throw std::invalid_argument("dual_objective: size mismatch");
  }
  double linear = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) linear += f[i] * volume[i];
  linear += sum_in_order(g);
  double barrier = 0.0;
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = 0; j < k.cols(); ++j) {
      barrier += std::exp((f[i] + g[j] - k(i, j)) / eps - 1.0);
    }
  }
  return linear - eps * barrier;
}

double primal_objective(const Coupling& u, const Matrix& k, double eps) {
  if (!u.same_shape(k)) throw std::invalid_argument("primal_objective: shape mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    const double x = u.data()[n];
    s += x * k.data()[n];
    if (x > 0.0) s += eps * x * std::log(x);
  }
  return s;
}

double row_sum_residual(const Coupling& u, std::span<const double> volume) {
  return residual_from_rows(kernels::row_sums(u), volume);
}

double coupling_cost(const Coupling& u, const Matrix& c) {
  if (!u.same_shape(c)) throw std::invalid_argument("coupling_cost: shape mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) s += u.data()[n] * c.data()[n];
  return s;
}

double coupling_entropy(const Coupling& u) {
  double h = 0.0;
  for (double x : u.data()) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

namespace {

struct SinkhornState {
  std::vector<double> f;
  std::vector<double> g;
};

// Both-marginal residual of u_ij = exp((f_i + g_j - C_ij) / eps - 1).
double marginal_residual(const Matrix& c, const SinkhornState& s, std::span<const double> a,
                         std::span<const double> b, double eps, Coupling* out = nullptr) {
  Coupling u(c.rows(), c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      u(i, j) = std::exp((s.f[i] + s.g[j] - c(i, j)) / eps - 1.0);
    }
  }
  double worst = 0.0;
  const auto rows = kernels::serial::row_sums(u);
  const auto cols = kernels::serial::column_sums(u);
  for (std::size_t i = 0; i < rows.size(); ++i) worst = std::max(worst, std::abs(rows[i] - a[i]));
  for (std::size_t j = 0; j < cols.size(); ++j) worst = std::max(worst, std::abs(cols[j] - b[j]));
  if (out) *out = std::move(u);
  return worst;
}

// One sweep: g = b-weighted c-transform of f, then f = a-weighted c-transform of g.
void sinkhorn_sweep(const Matrix& c, SinkhornState& s, std::span<const double> a,
                    std::span<const double> b, double eps) {
  std::vector<double> lse(c.cols());
  kernels::serial::column_lse(c, s.f, eps, lse);
  for (std::size_t j = 0; j < c.cols(); ++j) s.g[j] = eps * std::log(b[j]) - eps * (lse[j] - 1.0);
  std::vector<double> offset(c.cols());
  for (std::size_t j = 0; j < c.cols(); ++j) offset[j] = -s.g[j] / eps;
  const std::vector<double> zeros(c.rows(), 0.0);
  const std::vector<double> rows = kernels::serial::row_lse(c, zeros, offset, eps);
  for (std::size_t i = 0; i < c.rows(); ++i) s.f[i] = eps * std::log(a[i]) - eps * (rows[i] - 1.0);
}

}  // namespace

EntropicOtResult entropic_ot(std::span<const double> a, std::span<const double> b,
                             const Matrix& c, double eps, const EntropicOtOptions& options) {
  require_eps(eps);
  if (a.size() != c.rows() || b.size() != c.cols()) {
    throw std::invalid_argument("entropic_ot: histogram sizes do not match the cost matrix");
  }
  for (double x : a) {
    if (!(x >= 0.0)) throw std::invalid_argument("entropic_ot: negative mass");
  }
  for (double x : b) {
    if (!(x >= 0.0)) throw std::invalid_argument("entropic_ot: negative mass");
  }
  const double ma = sum_in_order(a);
  const double mb = sum_in_order(b);
  if (!(ma > 0.0) || std::abs(ma - mb) > 1e-9 * std::max(ma, mb)) {
    throw std::invalid_argument("entropic_ot: histogram masses differ");
  }

  // Restrict to the support of a and b.
  std::vector<std::size_t> rows_on, cols_on;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) rows_on.push_back(i);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] > 0.0) cols_on.push_back(j);
  }
  Matrix cs(rows_on.size(), cols_on.size());
  std::vector<double> as, bs;
  for (std::size_t i : rows_on) as.push_back(a[i]);
  for (std::size_t j : cols_on) bs.push_back(b[j]);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t r = 0; r < rows_on.size(); ++r) {
    for (std::size_t q = 0; q < cols_on.size(); ++q) {
      cs(r, q) = c(rows_on[r], cols_on[q]);
      lo = std::min(lo, cs(r, q));
      hi = std::max(hi, cs(r, q));
    }
  }

  std::vector<double> schedule;
  if (options.eps_scaling) {
    for (double e = std::max(eps, hi - lo); e > eps; e *= 0.25) schedule.push_back(e);
  }
  schedule.push_back(eps);

  SinkhornState state{std::vector<double>(as.size(), 0.0), std::vector<double>(bs.size(), 0.0)};
  EntropicOtResult result;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double e = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    const double stage_tol = last ? options.tol : std::max(options.tol, 1e-6 * ma);
    for (std::size_t it = 0; result.iterations < options.max_iter; ++it) {
      sinkhorn_sweep(cs, state, as, bs, e);
      ++result.iterations;
      if (!std::isfinite(state.f.front()) || !std::isfinite(state.g.front())) {
        throw NumericalError("entropic_ot: non-finite potentials");
      }
      if (it % 8 == 0 || last) {
        if (marginal_residual(cs, state, as, bs, e) <= stage_tol) break;
      }
      if (!last && it >= 2000) break;
    }
  }

  Coupling small;
  result.residual = marginal_residual(cs, state, as, bs, eps, &small);
  result.converged = result.residual <= options.tol;
  result.coupling = Coupling(a.size(), b.size(), 0.0);
  const double ninf = -std::numeric_limits<double>::infinity();
  result.f.assign(a.size(), ninf);
  result.g.assign(b.size(), ninf);
  for (std::size_t r = 0; r < rows_on.size(); ++r) {
    result.f[rows_on[r]] = state.f[r];
    for (std::size_t q = 0; q < cols_on.size(); ++q) {
      result.coupling(rows_on[r], cols_on[q]) = small(r, q);
    }
  }
  for (std::size_t q = 0; q < cols_on.size(); ++q) result.g[cols_on[q]] = state.g[q];
  return result;
}

}  // namespace vpseg
