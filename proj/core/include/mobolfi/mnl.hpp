#pragma once

#include "mobolfi/types.hpp"

namespace mobolfi::mnl {

/// Multinomial logit with utilities V_a = ASC_a + sum_k xi_k X_ak, ASC_1 = 0.
/// xi = (ASC_2, ASC_3, xi_1, xi_2, xi_3). CH is n x 3 one-hot, X is n x 9
/// alternative-major.
inline constexpr int kParams = 5;

double log_likelihood(const Matrix& ch, const Matrix& x, const Vector& xi);
Vector score(const Matrix& ch, const Matrix& x, const Vector& xi);
Matrix hessian(const Matrix& x, const Vector& xi);

/// Newton MLE; throws NumericalError on separation.
Vector fit_mle(const Matrix& ch, const Matrix& x, double grad_tol = 1e-8, int max_iter = 200);

/// Elementwise score scaled by `weights` (V1^{-1}).
Vector score_summary(const Matrix& ch, const Matrix& x, const Vector& xi_hat, const Vector& weights);

}  // namespace mobolfi::mnl
