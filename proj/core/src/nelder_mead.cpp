#include "nelder_mead.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>

namespace mobolfi::detail {

namespace {

struct Context {
  const std::function<double(const Vector&)>* f;
  Vector scratch;
  int evaluations = 0;
  double best_value = std::numeric_limits<double>::infinity();
  Vector best_x;
};

double trampoline(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<Context*>(params);
  for (Eigen::Index i = 0; i < ctx->scratch.size(); ++i)
    ctx->scratch[i] = gsl_vector_get(v, static_cast<size_t>(i));
  double value = (*ctx->f)(ctx->scratch);
  ++ctx->evaluations;
  if (!std::isfinite(value)) value = 1e300;
  if (value < ctx->best_value) {
    ctx->best_value = value;
    ctx->best_x = ctx->scratch;
  }
  return value;
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

MinimizeResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                           double step, int max_evaluations, double size_tol) {
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;

  const auto n = static_cast<size_t>(x0.size());
  Context ctx{&f, x0, 0, std::numeric_limits<double>::infinity(), x0};
  if (n == 0) {
    const double v = f(x0);
    return {x0, v, 1};
  }

  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> steps(gsl_vector_alloc(n));
  for (size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0[static_cast<Eigen::Index>(i)]);
  gsl_vector_set_all(steps.get(), step);

  gsl_multimin_function fn;
  fn.n = n;
  fn.f = &trampoline;
  fn.params = &ctx;

  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), steps.get());

  while (ctx.evaluations < max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(solver.get());
    if (gsl_multimin_test_size(size, size_tol) == GSL_SUCCESS) break;
  }
  return {ctx.best_x, ctx.best_value, ctx.evaluations};
}

}  // namespace mobolfi::detail
