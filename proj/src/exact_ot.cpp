#include "vpseg/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vpseg {

namespace {

// Tableau for min c^T x, A x = b, x >= 0 with b >= 0. Columns [0, n) are
// structural, [n, n + m) artificial, the last column is the right-hand side.
class Simplex {
 public:
  Simplex(const Matrix& a, std::span<const double> b, std::span<const double> cost)
      : m_(a.rows()), n_(a.cols()), width_(n_ + m_ + 1), t_(m_ + 1, width_), basis_(m_) {
    for (std::size_t r = 0; r < m_; ++r) {
      for (std::size_t k = 0; k < n_; ++k) t_(r, k) = a(r, k);
      t_(r, n_ + r) = 1.0;
      t_(r, width_ - 1) = b[r];
      basis_[r] = n_ + r;
    }
    cost_.assign(cost.begin(), cost.end());
    scale_ = std::max(1.0, *std::max_element(b.begin(), b.end()));
  }

  std::vector<double> solve() {
    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1(n_ + m_, 0.0);
    std::fill(phase1.begin() + static_cast<std::ptrdiff_t>(n_), phase1.end(), 1.0);
    set_objective(phase1);
    iterate(n_ + m_);
    if (t_(m_, width_ - 1) < -1e-9 * scale_) {
      throw std::invalid_argument("exact_ot_oracle: infeasible transport problem");
    }
    drive_out_artificials();

    std::vector<double> phase2(n_ + m_, 0.0);
    std::copy(cost_.begin(), cost_.end(), phase2.begin());
    set_objective(phase2);
    iterate(n_);

    std::vector<double> x(n_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) x[basis_[r]] = std::max(0.0, t_(r, width_ - 1));
    }
    return x;
  }

 private:
  // Objective row holds reduced costs; rhs entry holds -objective value.
  void set_objective(const std::vector<double>& c) {
    for (std::size_t k = 0; k < width_; ++k) t_(m_, k) = 0.0;
    for (std::size_t k = 0; k < n_ + m_; ++k) t_(m_, k) = c[k];
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = c[basis_[r]];
      if (cb == 0.0) continue;
      for (std::size_t k = 0; k < width_; ++k) t_(m_, k) -= cb * t_(r, k);
    }
  }

  void pivot(std::size_t row, std::size_t col) {
    const double p = t_(row, col);
    for (std::size_t k = 0; k < width_; ++k) t_(row, k) /= p;
    for (std::size_t r = 0; r <= m_; ++r) {
      if (r == row) continue;
      const double factor = t_(r, col);
      if (factor == 0.0) continue;
      for (std::size_t k = 0; k < width_; ++k) t_(r, k) -= factor * t_(row, k);
    }
    basis_[row] = col;
  }

  // Bland's rule: lowest-index entering column, lowest-index basic on ratio ties.
  void iterate(std::size_t allowed_cols) {
    constexpr double kTol = 1e-11;
    for (;;) {
      std::size_t enter = allowed_cols;
      for (std::size_t k = 0; k < allowed_cols; ++k) {
        if (t_(m_, k) < -kTol) {
          enter = k;
          break;
        }
      }
      if (enter == allowed_cols) return;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m_; ++r) {
        const double coef = t_(r, enter);
        if (coef <= kTol) continue;
        const double ratio = t_(r, width_ - 1) / coef;
        if (leave == m_ || ratio < best - kTol * scale_ ||
            (std::abs(ratio - best) <= kTol * scale_ && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == m_) throw std::logic_error("exact_ot_oracle: unbounded LP");
      pivot(leave, enter);
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < n_) continue;
      for (std::size_t k = 0; k < n_; ++k) {
        if (std::abs(t_(r, k)) > 1e-9) {
          pivot(r, k);
          break;
        }
      }
      // A row with no structural entry is redundant; its artificial stays at 0.
    }
  }

  std::size_t m_, n_, width_;
  Matrix t_;
  std::vector<std::size_t> basis_;
  std::vector<double> cost_;
  double scale_ = 1.0;
};

}  // namespace

ExactOtResult exact_ot_oracle(std::span<const double> a, std::span<const double> b,
                              const Matrix& c) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (c.rows() != n || c.cols() != m) {
    throw std::invalid_argument("exact_ot_oracle: histogram sizes do not match the cost");
  }
  if (n * m > 10000) throw std::invalid_argument("exact_ot_oracle: instance too large");
  for (double x : a) {
    if (!(x >= 0.0)) throw std::invalid_argument("exact_ot_oracle: negative mass");
  }
  for (double x : b) {
    if (!(x >= 0.0)) throw std::invalid_argument("exact_ot_oracle: negative mass");
  }
  const double ma = std::accumulate(a.begin(), a.end(), 0.0);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(ma - mb) > 1e-9 * std::max({ma, mb, 1.0})) {
    throw std::invalid_argument("exact_ot_oracle: histogram masses differ");
  }

  // Row constraints for every source, column constraints for all but the last
  // target (the remaining one is implied by equal masses).
  const std::size_t cons = n + (m > 0 ? m - 1 : 0);
  Matrix lhs(cons, n * m, 0.0);
  std::vector<double> rhs(cons);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) lhs(i, i * m + j) = 1.0;
    rhs[i] = a[i];
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) lhs(n + j, i * m + j) = 1.0;
    rhs[n + j] = b[j];
  }

  Simplex lp(lhs, rhs, c.data());
  const std::vector<double> x = lp.solve();
  ExactOtResult r;
  r.coupling = Coupling(n, m, x);
  for (std::size_t k = 0; k < x.size(); ++k) r.cost += x[k] * c.data()[k];
  return r;
}

}  // namespace vpseg
