#include "vpseg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vpseg::kernels {

namespace {

using Index = std::ptrdiff_t;

inline void gradient_row(std::span<const double> u, std::size_t height, std::size_t width,
                         std::size_t y, std::span<double> gx, std::span<double> gy) {
  const std::size_t base = y * width;
  for (std::size_t x = 0; x < width; ++x) {
    const std::size_t j = base + x;
    gx[j] = (x + 1 < width) ? u[j + 1] - u[j] : 0.0;
    gy[j] = (y + 1 < height) ? u[j + width] - u[j] : 0.0;
  }
}

inline void divergence_row(std::span<const double> qx, std::span<const double> qy,
                           std::size_t height, std::size_t width, std::size_t y,
                           std::span<double> out) {
  const std::size_t base = y * width;
  for (std::size_t x = 0; x < width; ++x) {
    const std::size_t j = base + x;
    double dx = 0.0;
    if (x + 1 < width) dx += qx[j];
    if (x > 0) dx -= qx[j - 1];
    double dy = 0.0;
    if (y + 1 < height) dy += qy[j];
    if (y > 0) dy -= qy[j - width];
    out[j] = dx + dy;
  }
}

// Softmax down column j; returns the log-sum-exp of the column logits.
inline double gibbs_column(const Matrix& k, std::span<const double> f, double inv_eps,
                           Matrix& u, std::size_t j) {
  const std::size_t rows = k.rows();
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows; ++i) {
    const double z = (f[i] - k(i, j)) * inv_eps;
    u(i, j) = z;
    zmax = std::max(zmax, z);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double e = std::exp(u(i, j) - zmax);
    u(i, j) = e;
    s += e;
  }
  const double inv = 1.0 / s;
  for (std::size_t i = 0; i < rows; ++i) u(i, j) *= inv;
  return zmax + std::log(s);
}

inline double column_lse_one(const Matrix& k, std::span<const double> f, double inv_eps,
                             std::size_t j) {
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k.rows(); ++i) zmax = std::max(zmax, (f[i] - k(i, j)) * inv_eps);
  double s = 0.0;
  for (std::size_t i = 0; i < k.rows(); ++i) s += std::exp((f[i] - k(i, j)) * inv_eps - zmax);
  return zmax + std::log(s);
}

// Running log-sum-exp accumulator: value = m + log(s).
struct Lse {
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;

  void add(double z) {
    if (z == -std::numeric_limits<double>::infinity()) return;
    if (z > m) {
      s = s * std::exp(m - z) + 1.0;
      m = z;
    } else {
      s += std::exp(z - m);
    }
  }
  void merge(const Lse& o) {
    if (o.s == 0.0) return;
    if (o.m > m) {
      s = s * std::exp(m - o.m) + o.s;
      m = o.m;
    } else {
      s += o.s * std::exp(o.m - m);
    }
  }
  double value() const { return m + std::log(s); }
};

inline Lse row_lse_range(const Matrix& k, std::span<const double> f,
                         std::span<const double> offset, double inv_eps, std::size_t i,
                         std::size_t begin, std::size_t end) {
  Lse acc;
  for (std::size_t j = begin; j < end; ++j) acc.add((f[i] - k(i, j)) * inv_eps - offset[j]);
  return acc;
}

inline void project_one(double& qx, double& qy, double bound) {
  const double norm = std::hypot(qx, qy);
  if (norm > bound) {
    double scale = (norm > 0.0) ? bound / norm : 0.0;
    qx *= scale;
    qy *= scale;
    // Rounding can leave the norm a few ulps above the bound; shrink until
    // inside so that a second projection is the identity.
    scale = std::nextafter(1.0, 0.0);
    while (std::hypot(qx, qy) > bound) {
      qx *= scale;
      qy *= scale;
    }
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gradient(std::span<const double> u, std::size_t height, std::size_t width,
              std::span<double> gx, std::span<double> gy) {
#pragma omp parallel for schedule(static)
  for (Index y = 0; y < static_cast<Index>(height); ++y) {
    gradient_row(u, height, width, static_cast<std::size_t>(y), gx, gy);
  }
}

void divergence(std::span<const double> qx, std::span<const double> qy, std::size_t height,
                std::size_t width, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (Index y = 0; y < static_cast<Index>(height); ++y) {
    divergence_row(qx, qy, height, width, static_cast<std::size_t>(y), out);
  }
}

void gibbs_columns(const Matrix& k, std::span<const double> f, double eps, Matrix& u,
                   std::span<double> lse) {
  if (!u.same_shape(k)) u = Matrix(k.rows(), k.cols());
  const double inv_eps = 1.0 / eps;
  const bool want_lse = !lse.empty();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(k.cols()); ++j) {
    const double l = gibbs_column(k, f, inv_eps, u, static_cast<std::size_t>(j));
    if (want_lse) lse[static_cast<std::size_t>(j)] = l;
  }
}

void column_lse(const Matrix& k, std::span<const double> f, double eps, std::span<double> out) {
  const double inv_eps = 1.0 / eps;
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(k.cols()); ++j) {
    out[static_cast<std::size_t>(j)] = column_lse_one(k, f, inv_eps, static_cast<std::size_t>(j));
  }
}

std::vector<double> row_lse(const Matrix& k, std::span<const double> f,
                            std::span<const double> offset, double eps) {
  const double inv_eps = 1.0 / eps;
  const std::size_t rows = k.rows();
  const std::size_t cols = k.cols();
  const std::size_t blocks = (cols + kReductionBlock - 1) / kReductionBlock;
  std::vector<Lse> partial(blocks * rows);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < static_cast<Index>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = std::min(cols, begin + kReductionBlock);
    for (std::size_t i = 0; i < rows; ++i) {
      partial[static_cast<std::size_t>(b) * rows + i] =
          row_lse_range(k, f, offset, inv_eps, i, begin, end);
    }
  }
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    Lse acc;
    for (std::size_t b = 0; b < blocks; ++b) acc.merge(partial[b * rows + i]);
    out[i] = acc.value();
  }
  return out;
}

void project_disc(std::span<double> qx, std::span<double> qy, std::span<const double> bound) {
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(qx.size()); ++j) {
    project_one(qx[j], qy[j], bound[j]);
  }
}

std::vector<double> row_sums(const Matrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const std::size_t blocks = (cols + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks * rows, 0.0);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < static_cast<Index>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = std::min(cols, begin + kReductionBlock);
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = begin; j < end; ++j) s += m(i, j);
      partial[static_cast<std::size_t>(b) * rows + i] = s;
    }
  }
  std::vector<double> out(rows, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < rows; ++i) out[i] += partial[b * rows + i];
  }
  return out;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < static_cast<Index>(m.cols()); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, static_cast<std::size_t>(j));
    out[static_cast<std::size_t>(j)] = s;
  }
  return out;
}

namespace serial {

void gradient(std::span<const double> u, std::size_t height, std::size_t width,
              std::span<double> gx, std::span<double> gy) {
  for (std::size_t y = 0; y < height; ++y) gradient_row(u, height, width, y, gx, gy);
}

void divergence(std::span<const double> qx, std::span<const double> qy, std::size_t height,
                std::size_t width, std::span<double> out) {
  for (std::size_t y = 0; y < height; ++y) divergence_row(qx, qy, height, width, y, out);
}

void gibbs_columns(const Matrix& k, std::span<const double> f, double eps, Matrix& u,
                   std::span<double> lse) {
  if (!u.same_shape(k)) u = Matrix(k.rows(), k.cols());
  const double inv_eps = 1.0 / eps;
  for (std::size_t j = 0; j < k.cols(); ++j) {
    const double l = gibbs_column(k, f, inv_eps, u, j);
    if (!lse.empty()) lse[j] = l;
  }
}

void column_lse(const Matrix& k, std::span<const double> f, double eps, std::span<double> out) {
  for (std::size_t j = 0; j < k.cols(); ++j) out[j] = column_lse_one(k, f, 1.0 / eps, j);
}

std::vector<double> row_lse(const Matrix& k, std::span<const double> f,
                            std::span<const double> offset, double eps) {
  // Same block order as the parallel kernel.
  std::vector<double> out(k.rows());
  for (std::size_t i = 0; i < k.rows(); ++i) {
    Lse acc;
    for (std::size_t begin = 0; begin < k.cols(); begin += kReductionBlock) {
      const std::size_t end = std::min(k.cols(), begin + kReductionBlock);
      acc.merge(row_lse_range(k, f, offset, 1.0 / eps, i, begin, end));
    }
    out[i] = acc.value();
  }
  return out;
}

void project_disc(std::span<double> qx, std::span<double> qy, std::span<const double> bound) {
  for (std::size_t j = 0; j < qx.size(); ++j) project_one(qx[j], qy[j], bound[j]);
}

std::vector<double> row_sums(const Matrix& m) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t begin = 0; begin < m.cols(); begin += kReductionBlock) {
      const std::size_t end = std::min(m.cols(), begin + kReductionBlock);
      double s = 0.0;
      for (std::size_t j = begin; j < end; ++j) s += m(i, j);
      out[i] += s;
    }
  }
  return out;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) out[j] += m(i, j);
  }
  return out;
}

}  // namespace serial

}  // namespace vpseg::kernels
