#include "mobolfi/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace mobolfi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArgClip = 37.0;

// Upper-orthant probability P(Z1 > dh, Z2 > dk), after Genz (2004).
double bvn_upper(double dh, double dk, double r) {
  if (dh == kInf || dk == kInf) return 0.0;
  if (dh == -kInf) return dk == -kInf ? 1.0 : normal_cdf(-dk);
  if (dk == -kInf) return normal_cdf(-dh);
  if (r == 0.0) return normal_cdf(-dh) * normal_cdf(-dk);

  static constexpr std::array<double, 3> w6{0.1713244923791705, 0.3607615730481384,
                                            0.4679139345726904};
  static constexpr std::array<double, 3> x6{0.9324695142031522, 0.6612093864662647,
                                            0.2386191860831970};
  static constexpr std::array<double, 6> w12{0.04717533638651177, 0.1069393259953183,
                                             0.1600783285433464,  0.2031674267230659,
                                             0.2334925365383547,  0.2491470458134029};
  static constexpr std::array<double, 6> x12{0.9815606342467191, 0.9041172563704750,
                                             0.7699026741943050, 0.5873179542866171,
                                             0.3678314989981802, 0.1252334085114692};
  static constexpr std::array<double, 10> w20{
      0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
      0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
      0.1491729864726037,  0.1527533871307259};
  static constexpr std::array<double, 10> x20{
      0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
      0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
      0.2277858511416451, 0.07652652113349733};

  const double* w;
  const double* x;
  int lg;
  const double ar = std::fabs(r);
  if (ar < 0.3) {
    w = w6.data(), x = x6.data(), lg = 3;
  } else if (ar < 0.75) {
    w = w12.data(), x = x12.data(), lg = 6;
  } else {
    w = w20.data(), x = x20.data(), lg = 10;
  }

  constexpr double tp = 2.0 * std::numbers::pi;
  double h = dh, k = dk, hk = h * k, bvn = 0.0;

  if (ar < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (int i = 0; i < lg; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sgn * x[i]));
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return bvn * asr / tp + normal_cdf(-h) * normal_cdf(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (ar < 1.0) {
    const double as = 1.0 - r * r;
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -(bs / as + hk) / 2.0;
    if (asr > -100.0)
      bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(tp) * normal_cdf(-b / a);
      bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a /= 2.0;
    double sum = 0.0;
    for (int i = 0; i < lg; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double xs = std::pow(a * (1.0 + sgn * x[i]), 2);
        asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
          const double rs = std::sqrt(1.0 - xs);
          const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
          sum += w[i] * std::exp(asr) * (sp - ep);
        }
      }
    }
    bvn = (a * sum - bvn) / tp;
  }
  if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
  if (h >= k) return -bvn;
  const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
  return l - bvn;
}

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// log of int_{-inf}^{h} phi(x) Phi((k - rho x)/r) dx with x = h - u. The log
// integrand is concave in u, so locate its mode and integrate a window of
// +-14 curvature widths with composite Gauss-Legendre.
double log_bvn_tail(double h, double k, double rho) {
  const double r = std::sqrt((1.0 - rho) * (1.0 + rho));
  const double a = (k - rho * h) / r;
  const double b = rho / r;
  auto log_integrand = [&](double u) {
    return -0.5 * (h - u) * (h - u) - kLogSqrt2Pi + log_normal_cdf(a + b * u);
  };
  auto slope = [&](double u) { return (h - u) + b * inverse_mills_ratio(a + b * u); };

  double mode = 0.0;
  if (slope(0.0) > 0.0) {
    double lo = 0.0, hi = std::max(1.0, h + std::max(b, 0.0) * inverse_mills_ratio(a) + 1.0);
    while (slope(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    mode = 0.5 * (lo + hi);
  }
  const double z = a + b * mode;
  const double lam = inverse_mills_ratio(z);
  const double width = 1.0 / std::sqrt(1.0 + b * b * lam * (z + lam));
  const double peak = log_integrand(mode);

  static constexpr std::array<double, 10> gx{
      0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
      0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
      0.2277858511416451, 0.07652652113349733};
  static constexpr std::array<double, 10> gw{
      0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
      0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
      0.1491729864726037,  0.1527533871307259};
  double acc = -kInf;
  auto panel = [&](double l, double r) {
    const double c = 0.5 * (l + r), half = 0.5 * (r - l);
    for (int i = 0; i < 10; ++i)
      for (double sgn : {-1.0, 1.0})
        acc = log_sum_exp(acc, std::log(gw[i] * half) + log_integrand(c + sgn * half * gx[i]));
  };
  // Panels grow geometrically away from the mode until the integrand has
  // dropped by e^-40; this copes with a sharp edge next to a long tail.
  for (double dir : {-1.0, 1.0}) {
    double edge = mode, step = 0.5 * width;
    for (int it = 0; it < 80; ++it) {
      double next = edge + dir * step;
      const bool at_zero = next <= 0.0;
      if (at_zero) next = 0.0;
      if (next == edge) break;
      panel(std::min(edge, next), std::max(edge, next));
      if (at_zero || log_integrand(next) < peak - 40.0) break;
      edge = next;
      step *= 2.0;
    }
  }
  return acc;
}

}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_normal_cdf(double x) {
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
  if (x >= -kArgClip) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) +
                        105.0 / (x2 * x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

double inverse_mills_ratio(double x) {
  if (x < -kArgClip) {
    // phi/Phi ~ -x / (1 - 1/x^2 + 3/x^4 - ...)
    const double x2 = x * x;
    return -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
  }
  return std::exp(-0.5 * x * x - kLogSqrt2Pi - log_normal_cdf(x));
}

double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(rho)) return std::numeric_limits<double>::quiet_NaN();
  rho = std::clamp(rho, -1.0, 1.0);
  if (h > kArgClip) return normal_cdf(k);
  if (k > kArgClip) return normal_cdf(h);
  const double p = bvn_upper(-h, -k, rho);
  return std::clamp(p, 0.0, 1.0);
}

double log_bvn_cdf(double h, double k, double rho) {
  rho = std::clamp(rho, -1.0, 1.0);
  if (h > kArgClip) return log_normal_cdf(k);
  if (k > kArgClip) return log_normal_cdf(h);
  if (h == -kInf || k == -kInf) return -kInf;
  const double p = bvn_cdf(h, k, rho);
  if (p > 1e-5) return std::log(p);
  if (rho >= 1.0) return log_normal_cdf(std::min(h, k));
  if (rho <= -1.0) return p > 0.0 ? std::log(p) : -kInf;
  if (rho == 0.0) return log_normal_cdf(h) + log_normal_cdf(k);
  // Integrate over the more extreme coordinate: its density decays fastest.
  return h <= k ? log_bvn_tail(h, k, rho) : log_bvn_tail(k, h, rho);
}

}  // namespace mobolfi
