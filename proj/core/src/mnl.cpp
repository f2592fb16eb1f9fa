#include "mobolfi/mnl.hpp"

#include <cmath>
#include <string>

namespace mobolfi::mnl {

namespace {

constexpr int kAlt = 3;

void check(const Matrix& x, const Vector& xi) {
  require(x.cols() == 9, "mnl: attribute matrix must have 9 columns");
  require(xi.size() == kParams, "mnl: xi must have 5 components");
}

Eigen::Matrix<double, kAlt, kParams> features(const Matrix& x, Eigen::Index n) {
  Eigen::Matrix<double, kAlt, kParams> z = Eigen::Matrix<double, kAlt, kParams>::Zero();
  z(1, 0) = 1.0;
  z(2, 1) = 1.0;
  for (int a = 0; a < kAlt; ++a)
    for (int k = 0; k < 3; ++k) z(a, 2 + k) = x(n, a * 3 + k);
  return z;
}

Eigen::Vector3d probabilities(const Eigen::Vector3d& v, double& log_norm) {
  const double mx = v.maxCoeff();
  const Eigen::Vector3d e = (v.array() - mx).exp();
  const double sum = e.sum();
  log_norm = mx + std::log(sum);
  return e / sum;
}

}  // namespace

double log_likelihood(const Matrix& ch, const Matrix& x, const Vector& xi) {
  check(x, xi);
  require(ch.rows() == x.rows() && ch.cols() == kAlt, "mnl: choice matrix shape mismatch");
  double ll = 0.0;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const Eigen::Vector3d v = features(x, n) * xi;
    double ln;
    probabilities(v, ln);
    ll += ch.row(n).dot(v) - ch.row(n).sum() * ln;
  }
  return ll;
}

Vector score(const Matrix& ch, const Matrix& x, const Vector& xi) {
  check(x, xi);
  require(ch.rows() == x.rows() && ch.cols() == kAlt, "mnl: choice matrix shape mismatch");
  Vector g = Vector::Zero(kParams);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const auto z = features(x, n);
    double ln;
    const Eigen::Vector3d p = probabilities(z * xi, ln);
    const Eigen::Vector3d r = ch.row(n).transpose() - ch.row(n).sum() * p;
    g += z.transpose() * r;
  }
  return g;
}

Matrix hessian(const Matrix& x, const Vector& xi) {
  check(x, xi);
  Matrix h = Matrix::Zero(kParams, kParams);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const auto z = features(x, n);
    double ln;
    const Eigen::Vector3d p = probabilities(z * xi, ln);
    const Eigen::Matrix<double, 1, kParams> zbar = p.transpose() * z;
    for (int a = 0; a < kAlt; ++a) {
      const Eigen::Matrix<double, 1, kParams> c = z.row(a) - zbar;
      h.noalias() -= p[a] * c.transpose() * c;
    }
  }
  return h;
}

Vector fit_mle(const Matrix& ch, const Matrix& x, double grad_tol, int max_iter) {
  require(ch.rows() == x.rows() && ch.cols() == kAlt, "mnl: choice matrix shape mismatch");
  const Vector counts = ch.colwise().sum();
  if ((counts.array() <= 0.0).any())
    throw ContractViolation("mnl: every alternative must be chosen at least once");
  Vector xi = Vector::Zero(kParams);
  double ll = log_likelihood(ch, x, xi);
  for (int it = 0; it < max_iter; ++it) {
    const Vector g = score(ch, x, xi);
    const Matrix h = hessian(x, xi);
    if (g.norm() < grad_tol) {
      // Under separation the gradient vanishes only because the estimates
      // run off to infinity, leaving a degenerate information matrix.
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(-h);
      if (eig.eigenvalues()[0] <= 1e-10 * eig.eigenvalues()[kParams - 1] || ll > -1e-8 * static_cast<double>(x.rows()))
        throw NumericalError("mnl: likelihood is unbounded (separated data)");
      return xi;
    }
    Eigen::LDLT<Matrix> ldlt(-h);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, -h.trace()))
      throw NumericalError("mnl: information matrix is singular (separated or collinear data)");
    const Vector step = ldlt.solve(g);
    double t = 1.0;
    Vector next = xi + step;
    double ll_next = log_likelihood(ch, x, next);
    while (!(ll_next >= ll - 1e-12 * std::abs(ll)) && t > 1e-10) {
      t *= 0.5;
      next = xi + t * step;
      ll_next = log_likelihood(ch, x, next);
    }
    xi = next;
    ll = ll_next;
    if (xi.norm() > 1e4) throw NumericalError("mnl: estimates diverge (separated data)");
  }
  const double gn = score(ch, x, xi).norm();
  throw NumericalError("mnl: Newton iterations did not converge (gradient norm " + std::to_string(gn) + ")");
}

Vector score_summary(const Matrix& ch, const Matrix& x, const Vector& xi_hat, const Vector& weights) {
  require(weights.size() == kParams, "mnl: weights must have 5 components");
  return score(ch, x, xi_hat).cwiseProduct(weights);
}

}  // namespace mobolfi::mnl
