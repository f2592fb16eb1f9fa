#include <benchmark/benchmark.h>

#include "mobolfi/acquisition.hpp"
#include "mobolfi/gp.hpp"
#include "mobolfi/mlba.hpp"
#include "mobolfi/normal.hpp"
#include "mobolfi/samplers.hpp"

using namespace mobolfi;

namespace {

gp::TrainingSet training(int n, int p, int k, Seed seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  gp::TrainingSet t;
  t.inputs.resize(n, p);
  t.outputs.resize(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) t.inputs(i, j) = u(rng);
    for (int c = 0; c < k; ++c) t.outputs(i, c) = t.inputs.row(i).squaredNorm() + 0.3 * c * t.inputs(i, 0) + 0.1 * u(rng);
  }
  return t;
}

gp::Surrogate conditioned(int n, int p, int k) {
  std::vector<gp::KernelSpec> ks(static_cast<std::size_t>(k));
  for (auto& s : ks) s.lengthscales = Vector::Constant(p, 0.8);
  Matrix noise = 0.01 * Matrix::Identity(k, k);
  if (k == 2) noise(0, 1) = noise(1, 0) = 0.004;
  return gp::Surrogate::condition(training(n, p, k, 1), ks, gp::NoiseModel::matrix(noise));
}

void BM_GpCondition(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(conditioned(n, 10, 2));
}
BENCHMARK(BM_GpCondition)->Arg(100)->Arg(250)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_GpPredict(benchmark::State& st) {
  const auto s = conditioned(static_cast<int>(st.range(0)), 10, 2);
  const Vector q = Vector::Constant(10, 0.1);
  for (auto _ : st) benchmark::DoNotOptimize(s.predict(q));
}
BENCHMARK(BM_GpPredict)->Arg(100)->Arg(250)->Arg(400);

void BM_GpFit(benchmark::State& st) {
  const auto t = training(static_cast<int>(st.range(0)), 10, 2, 2);
  gp::FitOptions opt;
  opt.starts = 1;
  for (auto _ : st) benchmark::DoNotOptimize(gp::fit(t, {}, opt));
}
BENCHMARK(BM_GpFit)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_NehviBatch(benchmark::State& st) {
  const auto s = conditioned(250, 10, 2);
  const acq::Nehvi nehvi(s, acq::reference_point(s.training().outputs), 3);
  Rng rng = make_rng(4);
  Matrix q(100, 10);
  for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) = standard_normal_vector(rng, 10).transpose() * 0.3;
  for (auto _ : st) benchmark::DoNotOptimize(nehvi.evaluate_batch(q));
  st.SetItemsProcessed(st.iterations() * q.rows());
}
BENCHMARK(BM_NehviBatch)->Unit(benchmark::kMillisecond);

void BM_Hypervolume2d(benchmark::State& st) {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector> pts;
  for (int i = 0; i < st.range(0); ++i) {
    Vector v(2);
    v << u(rng), u(rng);
    pts.push_back(v);
  }
  const Vector ref = Vector::Zero(2);
  for (auto _ : st) benchmark::DoNotOptimize(acq::hypervolume_2d(pts, ref));
}
BENCHMARK(BM_Hypervolume2d)->Arg(16)->Arg(256);

void BM_BvnCdf(benchmark::State& st) {
  double h = -1.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(bvn_cdf(h, 0.3, 0.85));
    h = h > 1.0 ? -1.0 : h + 1e-3;
  }
}
BENCHMARK(BM_BvnCdf);

void BM_MlbaSimulate(benchmark::State& st) {
  mlba::MlbaConfig cfg;
  cfg.attributes = mlba::synthetic_attributes(320, 20240101);
  Seed s = 0;
  for (auto _ : st) benchmark::DoNotOptimize(mlba::simulate(mlba::theta_true(), cfg, ++s));
}
BENCHMARK(BM_MlbaSimulate)->Unit(benchmark::kMicrosecond);

void BM_MlbaLogLikelihood(benchmark::State& st) {
  mlba::MlbaConfig cfg;
  cfg.attributes = mlba::synthetic_attributes(320, 20240101);
  const auto data = mlba::simulate(mlba::theta_true(), cfg, 1);
  for (auto _ : st) benchmark::DoNotOptimize(mlba::log_likelihood(mlba::theta_true(), data, cfg));
}
BENCHMARK(BM_MlbaLogLikelihood)->Unit(benchmark::kMicrosecond);

void BM_DemcGaussian(benchmark::State& st) {
  mcmc::LogPosterior lp;
  lp.log_lik = [](const Vector& x) { return -0.5 * x.squaredNorm(); };
  lp.bounds = Box::cube(6, -10.0, 10.0);
  mcmc::DemcOptions opt;
  opt.steps = 1000;
  opt.burn_in = 500;
  const Matrix init = mcmc::init_from_prior(
      lp, [](Rng& r) { return standard_normal_vector(r, 6); }, opt.n_chains, 1);
  for (auto _ : st) benchmark::DoNotOptimize(mcmc::demc_sample(lp, init, opt, 2));
}
BENCHMARK(BM_DemcGaussian)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
