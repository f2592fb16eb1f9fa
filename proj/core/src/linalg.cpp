#include "mobolfi/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace mobolfi {

Matrix robust_cholesky(const Matrix& a) {
  require(a.rows() == a.cols(), "robust_cholesky: matrix must be square");
  if (a.rows() == 0) return a;
  const Matrix sym = 0.5 * (a + a.transpose());
  const double scale = std::max(sym.diagonal().cwiseAbs().mean(), 1e-300);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (double rel = 1e-10; rel <= 1e-2; rel *= 10.0) {
    Matrix b = sym;
    b.diagonal().array() += rel * scale;
    llt.compute(b);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector ev = es.eigenvalues().cwiseMax(1e-12 * scale);
  const Matrix rebuilt = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  llt.compute(0.5 * (rebuilt + rebuilt.transpose()));
  if (llt.info() != Eigen::Success) throw NumericalError("robust_cholesky: factorization failed");
  return llt.matrixL();
}

Eigen::Matrix2d cholesky_2x2_psd(const Eigen::Matrix2d& a) {
  Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
  const double a11 = std::max(a(0, 0), 0.0);
  l(0, 0) = std::sqrt(a11);
  if (l(0, 0) > 0.0) {
    l(1, 0) = a(1, 0) / l(0, 0);
    l(1, 1) = std::sqrt(std::max(a(1, 1) - l(1, 0) * l(1, 0), 0.0));
  } else {
    l(1, 1) = std::sqrt(std::max(a(1, 1), 0.0));
  }
  return l;
}

}  // namespace mobolfi
