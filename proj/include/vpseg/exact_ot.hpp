#pragma once

#include <span>

#include "vpseg/matrix.hpp"

namespace vpseg {

struct ExactOtResult {
  Coupling coupling;  ///< an optimal vertex of the transport polytope
  double cost = 0.0;
};

/// Unregularized optimal transport by a dense two-phase simplex with Bland's
/// anti-cycling rule. Meant for small instances (rows * cols <= 10000); used
/// as an oracle for the entropic solvers. Throws std::invalid_argument on
/// negative or unequal masses.
ExactOtResult exact_ot_oracle(std::span<const double> a, std::span<const double> b,
                              const Matrix& c);

}  // namespace vpseg
