#pragma once

#include <array>
#include <functional>
#include <vector>

#include "mobolfi/gp.hpp"
#include "mobolfi/types.hpp"

namespace mobolfi::acq {

// Multi-objective code works in the maximization sense: objective vectors
// are negated discrepancies. Negation happens when leaving the surrogate
// (reference_point, Nehvi) and nowhere else.

/// Nondominated subset in the maximization sense. Equal vectors keep a
/// single representative. Output order: for K=2, decreasing first objective.
std::vector<Vector> pareto_filter(const std::vector<Vector>& points);

/// Exact area dominated by `front` and bounded below by `ref`. Every point
/// must dominate ref weakly (componentwise >=). Input need not be filtered.
double hypervolume_2d(const std::vector<Vector>& front, const Vector& ref);

/// Componentwise minimum of the negated discrepancies minus `margin`.
Vector reference_point(const Matrix& discrepancies, double margin = 0.1);

enum class EtaVariant { standard, reduced };

/// Default variant: reduced for p > 3.
EtaVariant default_eta_variant(std::size_t p);

/// standard: 2 log(n^{p/2+2} pi^2 / (3 eps)); reduced: 2 log(n^2 pi^2 / (3 eps)).
/// Non-positive results raise ContractViolation.
double eta_squared(std::size_t n, std::size_t p, double eps, EtaVariant variant);

/// mu_n(q) - sqrt(eta^2 sigma_n^2(q)) for a K=1 surrogate, with n the
/// training size and p its input dimension.
double lcb(const Vector& q, const gp::Surrogate& s, double eps = 0.1,
           EtaVariant variant = EtaVariant::reduced);
Vector lcb_batch(const Matrix& q, const gp::Surrogate& s, double eta2);

struct NehviOptions {
  int mc_samples = 128;
  // Observed points drawn jointly with the candidate: whole nondomination
  // layers of the posterior mean are added until baseline_min is reached,
  // and the set is capped at baseline_max.
  int baseline_min = 32;
  int baseline_max = 64;
};

/// Noisy expected hypervolume improvement for K=2 surrogates. The latent
/// objectives at the baseline points and the candidate are drawn jointly
/// from the GP posterior using fixed base samples, so the estimate is a
/// deterministic, smooth function of the candidate for a given seed.
class Nehvi {
 public:
  Nehvi(const gp::Surrogate& s, Vector ref, Seed seed, NehviOptions options = {});

  /// Mean improvement per candidate row.
  Vector evaluate_batch(const Matrix& candidates) const;
  double evaluate(const Vector& candidate) const;
  /// Per-draw improvements for a single candidate (length mc_samples).
  Vector draws(const Vector& candidate) const;

  const Matrix& baseline() const { return baseline_; }
  const Vector& reference() const { return ref_; }
  /// Mean hypervolume of the sampled baseline fronts.
  double baseline_hypervolume() const;

 private:
  Matrix draw_matrix(const Matrix& candidates) const;  // rows: candidates, cols: draws

  const gp::Surrogate* s_;
  Vector ref_;
  NehviOptions options_;
  Matrix baseline_;                 // m x p
  Matrix base_whitened_;            // L^{-1} C(train, B): nK x mK
  Matrix base_chol_;                // L_B, Cholesky of the posterior cov at B
  Matrix base_u_;                   // L_B^{-T} Z_B: mK x S
  Matrix z_candidate_;              // K x S
  // Per-draw staircase (maximization): first objective descending, second
  // ascending, clipped to lie strictly above ref.
  std::vector<std::vector<std::array<double, 2>>> fronts_;
};

/// Hypervolume improvement of y over a staircase front with the layout
/// used by Nehvi.
double hypervolume_improvement(const std::vector<std::array<double, 2>>& staircase,
                               const std::array<double, 2>& y, const std::array<double, 2>& ref);

struct OptimizerOptions {
  int restarts = 10;
  int candidates_per_restart = 100;
  int polish_rounds = 20;
  double initial_step = 0.05;  // fraction of box width
  // Incumbents (rows). When present, `local_fraction` of each restart's
  // candidates are Gaussian perturbations of random incumbents with sd
  // log-uniform in [local_scale_min, local_scale_max] x box width.
  Matrix anchors;
  double local_fraction = 0.5;
  double local_scale_min = 0.005;
  double local_scale_max = 0.1;
};

struct OptimizerResult {
  Vector x;
  double value = 0.0;
};

/// Values for a batch of points (rows); lower is better.
using BatchObjective = std::function<Vector(const Matrix&)>;

/// Random multi-start minimization over a box: uniform (and optionally
/// incumbent-centred) candidates per restart, then a coordinate search from the best candidate that halves
/// its step whenever no neighbour improves. Returns the best polished point.
OptimizerResult optimize_acquisition(const BatchObjective& objective, const Box& bounds,
                                     const OptimizerOptions& options, Seed seed);

}  // namespace mobolfi::acq
