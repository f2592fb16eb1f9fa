#include "doctest.h"

#include <cmath>
#include <random>

#include "mobolfi/acquisition.hpp"
#include "mobolfi/random.hpp"
#include "support/oracles.hpp"

using namespace mobolfi;
using namespace mobolfi::acq;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

bool same_set(std::vector<Vector> a, std::vector<Vector> b) {
  auto lt = [](const Vector& x, const Vector& y) {
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// Two far-apart, almost noiseless observations; a candidate midway is then
// uncorrelated with them and its latent posterior is the prior.
gp::Surrogate two_point_surrogate(double mean_constant, double obs_noise = 1e-10) {
  gp::TrainingSet t;
  t.inputs.resize(2, 1);
  t.inputs << -20.0, 20.0;
  t.outputs.resize(2, 2);
  t.outputs << 1.0, 3.0, 3.0, 1.0;
  gp::KernelSpec k;
  k.lengthscales = Vector::Constant(1, 1.0);
  k.signal_variance = 1.0;
  k.mean_constant = mean_constant;
  return gp::Surrogate::condition(t, {k, k}, gp::NoiseModel::matrix(Matrix::Identity(2, 2) * obs_noise));
}

}  // namespace

TEST_CASE("pareto_filter: hand cases, brute-force agreement, idempotence") {
  auto f = pareto_filter({v2(1, 2), v2(2, 1), v2(0, 0)});
  CHECK(same_set(f, {v2(1, 2), v2(2, 1)}));
  CHECK(same_set(pareto_filter({v2(5, -1)}), {v2(5, -1)}));
  CHECK(pareto_filter({}).empty());
  CHECK(pareto_filter({v2(1, 1), v2(1, 1), v2(0, 2)}).size() == 2);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> pts;
    for (int i = 0; i < 100; ++i) pts.push_back(v2(nd(rng), nd(rng)));
    pts.push_back(pts[3]);
    const auto front = pareto_filter(pts);
    CHECK(same_set(front, oracle::pareto_brute_force(pts)));
    CHECK(same_set(pareto_filter(front), front));
    std::vector<Vector> pts3;
    for (int i = 0; i < 60; ++i) {
      Vector v(3);
      v << nd(rng), nd(rng), nd(rng);
      pts3.push_back(v);
    }
    CHECK(same_set(pareto_filter(pts3), oracle::pareto_brute_force(pts3)));
  }
}

TEST_CASE("hypervolume_2d: hand values, union-area oracle, Monte Carlo, monotonicity") {
  CHECK(hypervolume_2d({v2(1, 1)}, v2(0, 0)) == doctest::Approx(1.0));
  CHECK(hypervolume_2d({v2(1, 2), v2(2, 1)}, v2(0, 0)) == doctest::Approx(3.0));
  CHECK(hypervolume_2d({}, v2(0, 0)) == 0.0);
  CHECK_THROWS_AS(hypervolume_2d({v2(-1, 2)}, v2(0, 0)), ContractViolation);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vector> pts;
    const int n = 1 + trial % 12;
    for (int i = 0; i < n; ++i) pts.push_back(v2(u(rng), u(rng)));
    const double hv = hypervolume_2d(pts, v2(0, 0));
    CHECK(hv == doctest::Approx(oracle::union_area_2d(pts, v2(0, 0))).epsilon(1e-12));
    auto more = pts;
    more.push_back(v2(u(rng), u(rng)));
    CHECK(hypervolume_2d(more, v2(0, 0)) >= hv);
  }

  std::vector<Vector> front{v2(0.2, 0.9), v2(0.5, 0.6), v2(0.8, 0.3), v2(0.95, 0.1)};
  const double hv = hypervolume_2d(front, v2(0, 0));
  const int samples = 200000;
  int hits = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = u(rng), y = u(rng);
    for (const auto& p : front)
      if (x <= p[0] && y <= p[1]) {
        ++hits;
        break;
      }
  }
  const double frac = static_cast<double>(hits) / samples;
  CHECK(std::fabs(frac - hv) < 3.0 * std::sqrt(frac * (1 - frac) / samples));
}

TEST_CASE("hypervolume_improvement matches difference of hypervolumes") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vector> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(v2(u(rng), u(rng)));
    const auto front = pareto_filter(pts);
    std::vector<std::array<double, 2>> stairs;
    for (const auto& p : front) stairs.push_back({p[0], p[1]});
    const Vector y = v2(1.2 * u(rng) - 0.1, 1.2 * u(rng) - 0.1);
    auto with = front;
    if (y[0] > 0 && y[1] > 0) with.push_back(y);
    const double expect = oracle::union_area_2d(with, v2(0, 0)) - oracle::union_area_2d(front, v2(0, 0));
    CHECK(hypervolume_improvement(stairs, {y[0], y[1]}, {0.0, 0.0}) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("reference point sits 0.1 below the negated discrepancies") {
  Matrix d(3, 2);
  d << 1.0, 4.0, 2.0, 0.5, 3.0, 1.0;
  const Vector r = reference_point(d);
  CHECK(r[0] == doctest::Approx(-3.1));
  CHECK(r[1] == doctest::Approx(-4.1));
}

TEST_CASE("eta squared and lcb") {
  // 2 log(100^7 pi^2 / 0.3) and 2 log(100^2 pi^2 / 0.3), evaluated independently.
  CHECK(eta_squared(100, 10, 0.1, EtaVariant::standard) == doctest::Approx(71.45924775588276).epsilon(1e-13));
  CHECK(eta_squared(100, 10, 0.1, EtaVariant::reduced) == doctest::Approx(25.40754589600184).epsilon(1e-13));
  for (std::size_t p = 1; p <= 10; ++p)
    CHECK(eta_squared(100, p, 0.1, EtaVariant::reduced) < eta_squared(100, p, 0.1, EtaVariant::standard));
  CHECK_THROWS_AS(eta_squared(1, 1, 1e6, EtaVariant::reduced), ContractViolation);
  CHECK(default_eta_variant(3) == EtaVariant::standard);
  CHECK(default_eta_variant(4) == EtaVariant::reduced);

  gp::TrainingSet t;
  t.inputs.resize(5, 1);
  t.outputs.resize(5, 1);
  t.inputs << -1, -0.5, 0, 0.5, 1;
  t.outputs << 1, 0.25, 0, 0.25, 1;
  gp::KernelSpec k;
  k.lengthscales = Vector::Constant(1, 0.7);
  auto s = gp::Surrogate::condition(t, {k}, gp::NoiseModel::scalar(1e-12));
  Vector q = Vector::Constant(1, 0.0);
  CHECK(std::fabs(lcb(q, s) - s.predict(q).mean[0]) < 1e-3);
  q[0] = 0.3;
  const double std_val = lcb(q, s, 0.1, EtaVariant::standard);
  const double red_val = lcb(q, s, 0.1, EtaVariant::reduced);
  CHECK(red_val >= std_val);
  const Vector batch = lcb_batch(Matrix(q.transpose()), s, eta_squared(5, 1, 0.1, EtaVariant::reduced));
  CHECK(batch[0] == doctest::Approx(red_val).epsilon(1e-12));
}

TEST_CASE("nehvi agrees with quadrature on an analytically known posterior") {
  // Negated observations (-1,-3), (-3,-1); ref (-3.1,-3.1); candidate latent
  // ~ N((2,2), I) so its objective is N((-2,-2), I).
  const auto s = two_point_surrogate(2.0);
  const Vector ref = reference_point(s.training().outputs);
  NehviOptions opt;
  opt.mc_samples = 8192;
  const Nehvi nehvi(s, ref, 5, opt);
  const Vector q = Vector::Zero(1);
  const Vector d = nehvi.draws(q);
  const double est = d.mean();
  const double se = std::sqrt((d.array() - est).square().sum() / (d.size() - 1) / d.size());

  std::vector<Vector> front{v2(-1, -3), v2(-3, -1)};
  const double base = oracle::union_area_2d(front, ref);
  const int grid = 1200;
  const double lo = -2.0 - 8.0, hi = -2.0 + 8.0, h = (hi - lo) / grid;
  double quad = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double y0 = lo + (i + 0.5) * h;
    if (y0 <= ref[0]) continue;
    for (int j = 0; j < grid; ++j) {
      const double y1 = lo + (j + 0.5) * h;
      if (y1 <= ref[1]) continue;
      auto with = front;
      with.push_back(v2(y0, y1));
      const double w = std::exp(-0.5 * ((y0 + 2) * (y0 + 2) + (y1 + 2) * (y1 + 2))) / (2 * M_PI);
      quad += w * (oracle::union_area_2d(with, ref) - base) * h * h;
    }
  }
  CHECK(std::fabs(est - quad) < 3.0 * se);
  CHECK(quad > 0.1);
}

TEST_CASE("nehvi is zero where no improvement is possible") {
  const auto s = two_point_surrogate(2.0);
  const Vector ref = reference_point(s.training().outputs);
  const Nehvi nehvi(s, ref, 1);
  // The candidate coincides with an observed point on the front.
  CHECK(nehvi.evaluate(Vector(Vector::Constant(1, -20.0))) < 1e-6);
  // Mass far below the reference point.
  const auto bad = two_point_surrogate(50.0);
  const Nehvi nb(bad, reference_point(bad.training().outputs), 1);
  CHECK(nb.evaluate(Vector(Vector::Zero(1))) == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  Matrix c(50, 1);
  for (int i = 0; i < 50; ++i) c(i, 0) = u(rng);
  CHECK((nehvi.evaluate_batch(c).array() >= 0.0).all());
}

TEST_CASE("nehvi estimator variance halves when mc_samples doubles") {
  const auto s = two_point_surrogate(2.0);
  const Vector ref = reference_point(s.training().outputs);
  auto variance_at = [&](int samples) {
    NehviOptions opt;
    opt.mc_samples = samples;
    std::vector<double> est;
    for (Seed seed = 0; seed < 200; ++seed) est.push_back(Nehvi(s, ref, seed, opt).evaluate(Vector(Vector::Zero(1))));
    double m = 0.0;
    for (double e : est) m += e;
    m /= est.size();
    double v = 0.0;
    for (double e : est) v += (e - m) * (e - m);
    return v / (est.size() - 1);
  };
  const double ratio = variance_at(64) / variance_at(128);
  CHECK(ratio > 2.0 / 1.3);
  CHECK(ratio < 2.0 * 1.3);
}

TEST_CASE("nehvi is deterministic given the seed") {
  const auto s = two_point_surrogate(2.0);
  const Vector ref = reference_point(s.training().outputs);
  const Vector q = Vector::Constant(1, 0.4);
  CHECK(Nehvi(s, ref, 77).evaluate(q) == Nehvi(s, ref, 77).evaluate(q));
}

TEST_CASE("optimize_acquisition recovers the minimum of a quadratic lcb surface") {
  gp::TrainingSet t;
  const int n = 15;
  t.inputs.resize(n, 1);
  t.outputs.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    t.inputs(i, 0) = -2.0 + 4.0 * i / (n - 1);
    t.outputs(i, 0) = t.inputs(i, 0) * t.inputs(i, 0);
  }
  const auto s = gp::fit(t, {}, gp::FitOptions{});
  const double eta2 = eta_squared(n, 1, 0.1, EtaVariant::standard);
  const Box box = Box::cube(1, -2.0, 2.0);
  auto obj = [&](const Matrix& q) { return lcb_batch(q, s, eta2); };
  const auto res = optimize_acquisition(obj, box, OptimizerOptions{}, 4);
  CHECK(std::fabs(res.x[0]) < 0.3);
  CHECK(box.contains(res.x));

  OptimizerOptions one;
  one.restarts = 1;
  one.candidates_per_restart = 1;
  const auto a = optimize_acquisition(obj, box, one, 99);
  const auto b = optimize_acquisition(obj, box, one, 99);
  CHECK(a.x == b.x);
  CHECK(a.value == b.value);
}

TEST_CASE("optimize_acquisition never leaves the box") {
  const Box box(v2(-1.0, 2.0), v2(0.5, 3.0));
  auto obj = [](const Matrix& q) -> Vector { return -(q.col(0) + q.col(1)); };
  const auto res = optimize_acquisition(obj, box, OptimizerOptions{}, 1);
  CHECK(box.contains(res.x));
  CHECK(res.x[0] == doctest::Approx(0.5));
  CHECK(res.x[1] == doctest::Approx(3.0));
}
