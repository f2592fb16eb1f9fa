#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "mobolfi/csv.hpp"
#include "mobolfi/mlba.hpp"
#include "mobolfi/random.hpp"

using namespace mobolfi;
using namespace mobolfi::mlba;

namespace {

MlbaConfig reference_config() {
  MlbaConfig cfg;
  cfg.attributes = read_csv(std::string(MOBOLFI_DATA_DIR) + "/mlba_attributes.csv").data;
  return cfg;
}

MlbaConfig single_row(const MlbaConfig& cfg, Eigen::Index row) {
  MlbaConfig one = cfg;
  one.attributes = cfg.attributes.middleRows(row, 1);
  return one;
}

}  // namespace

TEST_CASE("mlba: reference attribute file") {
  const auto cfg = reference_config();
  CHECK(cfg.n_obs() == 320);
  CHECK(cfg.n_alternatives() == 3);
  CHECK((cfg.attributes - synthetic_attributes(320, 20240101)).norm() == 0.0);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("mlba: prior box") {
  const Box b = prior_box();
  const Vector t = theta_true();
  CHECK(b.contains(t));
  CHECK(b.lower[0] == 0.0);
  CHECK(b.upper[0] == 1.0);
  for (int j = 1; j < kParams; ++j) CHECK(b.upper[j] - b.lower[j] == doctest::Approx(8.0));
}

TEST_CASE("mlba: drift means") {
  auto cfg = reference_config();
  SUBCASE("hand evaluation on the first observation") {
    const Vector d = drift_means(theta_true(), cfg, 0);
    CHECK(d[0] == doctest::Approx(9.023637090103982).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(7.697473121884671).epsilon(1e-12));
    CHECK(d[2] == doctest::Approx(6.8857978558484).epsilon(1e-12));
  }
  SUBCASE("identical attributes") {
    MlbaConfig eq;
    eq.attributes = Matrix(1, 9);
    eq.attributes << 0.2, 0.5, 0.9, 0.2, 0.5, 0.9, 0.2, 0.5, 0.9;
    Vector th = theta_true();
    th[3] = -3.0;
    const Vector d = drift_means(th, eq, 0);
    CHECK(d[0] == doctest::Approx(2.0));
    CHECK(d[1] == 0.0);
    CHECK(d[2] == doctest::Approx(3.5));
  }
  SUBCASE("zero sensitivities give the plain comparison sum") {
    MlbaConfig c = single_row(cfg, 3);
    c.lambda2 = 0.0;
    Vector th = theta_true();
    th[0] = 0.0;
    const Vector d = drift_means(th, c, 0);
    const double beta[3] = {th[1], th[2], c.beta3};
    const double delta[3] = {0.0, th[3], th[4]};
    for (int a = 0; a < 3; ++a) {
      double s = 2.0 + delta[a];
      for (int b = 0; b < 3; ++b)
        for (int k = 0; k < 3; ++k) s += beta[k] * (c.attributes(0, a * 3 + k) - c.attributes(0, b * 3 + k));
      CHECK(d[a] == doctest::Approx(std::max(s, 0.0)).epsilon(1e-12));
    }
  }
  SUBCASE("never negative and invariant to reordering the other alternatives") {
    Rng rng = make_rng(9);
    const Box b = prior_box();
    for (int rep = 0; rep < 50; ++rep) {
      const Vector th = uniform_in_box(rng, b);
      for (Eigen::Index i = 0; i < 20; ++i) {
        const Vector d = drift_means(th, cfg, i);
        CHECK((d.array() >= 0.0).all());
        MlbaConfig swapped = single_row(cfg, i);
        swapped.attributes.block(0, 3, 1, 3).swap(swapped.attributes.block(0, 6, 1, 3));
        swapped.delta1 = 0.0;
        Vector ths = th;
        std::swap(ths[3], ths[4]);
        const Vector ds = drift_means(ths, swapped, 0);
        CHECK(ds[0] == doctest::Approx(d[0]).epsilon(1e-12));
        CHECK(ds[1] == doctest::Approx(d[2]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mlba: finishing-time density and CDF") {
  struct Case {
    double t, d, pdf, cdf;
  };
  // Independent high-precision evaluation, A = 1, s = 1, chi = 10.
  const Case cases[] = {{3, 2, 0.21780378305770344546, 0.12561891349576508045},
                        {10, 0.5, 0.049496791637551425837, 0.47207594590173197177},
                        {0.5, 6, 3.212273011574104778e-32, 7.3025939283513805524e-35},
                        {50, 0, 0.0029775782899460155136, 0.84931161193145335502},
                        {200, 1, 0.000071549994066715616797, 0.98601437690358564365}};
  for (const auto& c : cases) {
    CHECK(lba_pdf(c.t, c.d, 1.0, 10.0, 1.0) == doctest::Approx(c.pdf).epsilon(1e-9));
    CHECK(lba_cdf(c.t, c.d, 1.0, 10.0, 1.0) == doctest::Approx(c.cdf).epsilon(1e-9));
  }
  SUBCASE("derivative of the CDF is the density") {
    for (double t : {1.0, 2.5, 7.0, 30.0})
      for (double d : {0.0, 1.0, 4.0}) {
        const double h = 1e-5 * t;
        const double fd = (lba_cdf(t + h, d, 1.0, 10.0, 1.0) - lba_cdf(t - h, d, 1.0, 10.0, 1.0)) / (2 * h);
        CHECK(fd == doctest::Approx(lba_pdf(t, d, 1.0, 10.0, 1.0)).epsilon(1e-5));
      }
  }
  CHECK(lba_pdf(0.0, 1.0, 1.0, 10.0, 1.0) == 0.0);
  CHECK(lba_cdf(1e9, 1.0, 1.0, 10.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("mlba: single-observation hand case with a dominant accumulator") {
  MlbaConfig cfg;
  cfg.attributes = Matrix::Zero(1, 9);
  Params p{0.1, 0.8, 2.0, 1000.0, {0, 0, 0}, {0, 0, 0}};
  Vector d(3);
  d << 2.0, 0.0001, 0.0001;
  CHECK(log_joint_density(0, 400.0, d, p, cfg) == doctest::Approx(-6.1210638744417365463).epsilon(1e-10));
  CHECK(log_joint_density(0, 450.0, d, p, cfg) == doctest::Approx(-6.2850138737445813729).epsilon(1e-10));
  CHECK(log_joint_density(0, 600.0, d, p, cfg) == doctest::Approx(-7.0396821017694847122).epsilon(1e-10));
}

TEST_CASE("mlba: simulator") {
  const auto cfg = reference_config();
  const auto a = simulate(theta_true(), cfg, 1);
  const auto b = simulate(theta_true(), cfg, 1);
  CHECK(a.size() == 320);
  CHECK((a.rt - b.rt).norm() == 0.0);
  CHECK(a.choice == b.choice);
  CHECK((a.rt.array() > cfg.tau0).all());
  CHECK((a.one_hot().rowwise().sum().array() == 1.0).all());

  SUBCASE("single alternative always wins") {
    MlbaConfig one;
    one.attributes = cfg.attributes.leftCols(3);
    const auto d = simulate(theta_true(), one, 3);
    CHECK(std::all_of(d.choice.begin(), d.choice.end(), [](int c) { return c == 0; }));
  }
  SUBCASE("raising the threshold stochastically increases response times") {
    const auto row = single_row(cfg, 0);
    Vector lo = theta_true(), hi = theta_true();
    hi[5] += 0.5;
    std::vector<double> rl, rh;
    for (int s = 0; s < 10000; ++s) {
      rl.push_back(simulate(lo, row, 500 + s).rt[0]);
      rh.push_back(simulate(hi, row, 500 + s).rt[0]);
    }
    std::sort(rl.begin(), rl.end());
    std::sort(rh.begin(), rh.end());
    for (std::size_t i = 0; i < rl.size(); i += 100) CHECK(rh[i] >= rl[i]);
  }
  SUBCASE("choice frequencies agree with closed-form integrals") {
    const auto row = single_row(cfg, 0);
    const int n = 100000;
    double counts[3] = {0, 0, 0};
    for (int s = 0; s < n; ++s) counts[simulate(theta_true(), row, derive_seed(42, s)).choice[0]] += 1.0;
    double total = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double p = joint_probability(theta_true(), row, 0, a, 0.0);
      total += p;
      CHECK(std::abs(counts[a] / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("mlba: log-likelihood") {
  const auto cfg = reference_config();
  const auto obs = simulate(theta_true(), cfg, 7);
  const double ll = log_likelihood(theta_true(), obs, cfg);
  CHECK(std::isfinite(ll));
  Vector far = theta_true();
  far[5] += 2.0;
  CHECK(log_likelihood(far, obs, cfg) < ll);
  auto bad = obs;
  bad.rt[5] = 0.0;
  CHECK_THROWS_AS(log_likelihood(theta_true(), bad, cfg), ContractViolation);
}

TEST_CASE("mlba: discrepancies") {
  const auto cfg = reference_config();
  const auto obs = simulate(theta_true(), cfg, 7);
  const auto sim = simulate(theta_true(), cfg, 8);
  const Vector zero = discrepancies(obs, obs);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);

  SUBCASE("row permutation only moves the choice term through matching") {
    auto perm = sim;
    std::reverse(perm.rt.data(), perm.rt.data() + perm.rt.size());
    CHECK(discrepancies(perm, obs)[0] == doctest::Approx(discrepancies(sim, obs)[0]).epsilon(1e-14));
  }
  SUBCASE("disjoint choices") {
    auto other = obs;
    for (auto& c : other.choice) c = (c + 1) % 3;
    CHECK(discrepancies(other, obs)[1] == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("direct L1 of sorted log RT") {
    std::vector<double> a(sim.rt.data(), sim.rt.data() + 320), b(obs.rt.data(), obs.rt.data() + 320);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double l1 = 0.0;
    for (int i = 0; i < 320; ++i) l1 += std::abs(std::log(a[i] / b[i]));
    CHECK(discrepancies(sim, obs)[0] == doctest::Approx(l1).epsilon(1e-12));
  }
  SUBCASE("size mismatch") {
    MlbaData small{obs.rt.head(10), std::vector<int>(obs.choice.begin(), obs.choice.begin() + 10)};
    CHECK_THROWS_AS(discrepancies(small, obs), ContractViolation);
  }
}

TEST_CASE("mlba: replicated discrepancies") {
  const auto cfg = reference_config();
  const auto obs = simulate(theta_true(), cfg, 7);
  SUBCASE("exact replicates hit the floor") {
    const Vector r = replicated_discrepancies(std::vector<MlbaData>(5, obs), obs);
    CHECK(r[0] == doctest::Approx(std::log(1e-12)));
    CHECK(r[1] == doctest::Approx(std::log(1e-12)));
  }
  SUBCASE("one replicate") {
    const auto sim = simulate(theta_true(), cfg, derive_seed(3, 0));
    const Vector r = replicated_discrepancies(theta_true(), obs, cfg, 1, 3);
    const Vector d = discrepancies(sim, obs);
    CHECK(r[0] == doctest::Approx(std::log(d[0] / 3.0)).epsilon(1e-12));
    const Vector diff = (sim.one_hot() - obs.one_hot()).colwise().sum();
    CHECK(r[1] == doctest::Approx(std::log(diff.squaredNorm() / (9.0 * 320 * 320))).epsilon(1e-12));
  }
  SUBCASE("averaging shrinks reseed variability") {
    std::vector<double> single, avg;
    for (int rep = 0; rep < 100; ++rep) {
      single.push_back(std::exp(replicated_discrepancies(theta_true(), obs, cfg, 1, 1000 + rep)[0]));
      avg.push_back(std::exp(replicated_discrepancies(theta_true(), obs, cfg, 10, 5000 + rep)[0]));
    }
    auto sd = [](const std::vector<double>& v) {
      double m = 0.0, s = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      for (double x : v) s += (x - m) * (x - m);
      return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    CHECK(sd(avg) < 1.5 * sd(single) / std::sqrt(10.0));
  }
}
