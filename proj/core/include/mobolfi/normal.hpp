#pragma once

namespace mobolfi {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_pdf(double x);
double normal_cdf(double x);

/// log Phi(x), accurate in relative terms over the whole real line. Beyond
/// x < -37 (where erfc underflows) the Mills-ratio expansion takes over.
double log_normal_cdf(double x);

/// phi(x) / Phi(x), the inverse Mills ratio, without overflow for x << 0.
double inverse_mills_ratio(double x);

/// P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation rho.
/// Drezner-Wesolowsky reduction with 6/12/20-point Gauss-Legendre rules
/// selected by |rho| (Genz's BVND); absolute error below 1e-14.
double bvn_cdf(double h, double k, double rho);

/// log P(Z1 <= h, Z2 <= k). Uses bvn_cdf while the probability is large enough
/// to be represented with full relative precision and otherwise integrates the
/// log-concave conditional form in log space, so the result stays finite far
/// into the tails.
double log_bvn_cdf(double h, double k, double rho);

}  // namespace mobolfi
