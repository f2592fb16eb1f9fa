#pragma once

#include <functional>

#include "mobolfi/types.hpp"

namespace mobolfi::detail {

struct MinimizeResult {
  Vector x;
  double value;
  int evaluations;
};

/// Unconstrained Nelder-Mead minimization (GSL nmsimplex2). Stops when the
/// simplex size drops below `size_tol` or after `max_evaluations` objective
/// calls. Non-finite objective values are treated as +huge.
MinimizeResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                           double step, int max_evaluations, double size_tol = 1e-4);

}  // namespace mobolfi::detail
