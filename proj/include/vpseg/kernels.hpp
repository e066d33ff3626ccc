#pragma once

// Data-parallel inner loops. Every kernel in vpseg::kernels has a twin in
// vpseg::kernels::serial with the same signature; the serial versions are
// straightforward loops kept as the reference for tests and benchmarks.
//
// Reductions over pixels use a fixed block decomposition (kReductionBlock
// columns per block, blocks summed in index order), so results do not depend
// on the number of OpenMP threads.

#include <cstddef>
#include <span>
#include <vector>

#include "vpseg/matrix.hpp"

namespace vpseg::kernels {

inline constexpr std::size_t kReductionBlock = 2048;

/// Number of OpenMP threads that parallel regions will use (1 without OpenMP).
int max_threads();

/// Forward differences, Neumann boundary. u, gx, gy are height*width.
void gradient(std::span<const double> u, std::size_t height, std::size_t width,
              std::span<double> gx, std::span<double> gy);

/// Backward differences matching gradient() so that div = -grad^T.
void divergence(std::span<const double> qx, std::span<const double> qy, std::size_t height,
                std::size_t width, std::span<double> out);

/// u(i, j) = exp(z(i, j) - lse_j) with z(i, j) = (f_i - k(i, j)) / eps.
/// If lse is non-empty it receives the per-column log-sum-exp of z.
void gibbs_columns(const Matrix& k, std::span<const double> f, double eps, Matrix& u,
                   std::span<double> lse = {});

/// out_j = log sum_i exp((f_i - k(i, j)) / eps), without forming the softmax.
void column_lse(const Matrix& k, std::span<const double> f, double eps, std::span<double> out);

/// r_i = log sum_j exp((f_i - k(i, j)) / eps - offset_j); fixed-order blocked
/// reduction in the log domain.
std::vector<double> row_lse(const Matrix& k, std::span<const double> f,
                            std::span<const double> offset, double eps);

/// Radial projection of each (qx, qy) onto the disc of radius bound[j].
void project_disc(std::span<double> qx, std::span<double> qy, std::span<const double> bound);

/// Row sums of m, fixed-order blocked reduction.
std::vector<double> row_sums(const Matrix& m);

/// Column sums of m.
std::vector<double> column_sums(const Matrix& m);

namespace serial {

void gradient(std::span<const double> u, std::size_t height, std::size_t width,
              std::span<double> gx, std::span<double> gy);
void divergence(std::span<const double> qx, std::span<const double> qy, std::size_t height,
                std::size_t width, std::span<double> out);
void gibbs_columns(const Matrix& k, std::span<const double> f, double eps, Matrix& u,
                   std::span<double> lse = {});
void column_lse(const Matrix& k, std::span<const double> f, double eps, std::span<double> out);
std::vector<double> row_lse(const Matrix& k, std::span<const double> f,
                            std::span<const double> offset, double eps);
void project_disc(std::span<double> qx, std::span<double> qy, std::span<const double> bound);
std::vector<double> row_sums(const Matrix& m);
std::vector<double> column_sums(const Matrix& m);

}  // namespace serial

}  // namespace vpseg::kernels
