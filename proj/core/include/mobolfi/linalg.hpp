#pragma once

#include "mobolfi/types.hpp"

namespace mobolfi {

/// Lower Cholesky factor of a symmetric PSD matrix. Adds diagonal jitter
/// starting at 1e-10 x mean diagonal and growing x10 until the factorization
/// succeeds; falls back to an eigenvalue clamp for hopeless inputs.
Matrix robust_cholesky(const Matrix& a);

/// Lower Cholesky factor of a 2x2 PSD matrix with negative pivots clamped
/// to zero.
Eigen::Matrix2d cholesky_2x2_psd(const Eigen::Matrix2d& a);

}  // namespace mobolfi
