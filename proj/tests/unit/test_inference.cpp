#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spm/errors.hpp"
#include "spm/inference.hpp"
#include "spm/synth.hpp"

using namespace spm;

namespace {

McmcConfig quick(std::size_t iters, std::size_t warmup, std::uint64_t seed = 3) {
  McmcConfig c;
  c.iterations = iters;
  c.warmup = warmup;
  c.chains = 2;
  c.seed = seed;
  c.workers = 1;
  c.age_knots = 20;
  return c;
}

std::vector<double> column(const FitResult& f, const std::string& name) {
  const auto j = static_cast<Eigen::Index>(f.column(name));
  return {f.draws.col(j).data(), f.draws.col(j).data() + f.draws.rows()};
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("prior-only sampling recovers the prior on c") {
  const Cohort c = generate_cohort(1, 200, paper_theta_true());
  McmcConfig cfg = quick(4000, 100);
  cfg.prior_only = true;
  const FitResult f = fit(c, ModelKind::spm, PriorSpec{}, cfg);
  const auto draws = column(f, "c");
  double m = 0.0, v = 0.0;
  for (double x : draws) m += x;
  m /= draws.size();
  for (double x : draws) v += (x - m) * (x - m);
  v /= draws.size() - 1;
  const double se = 1.0 / std::sqrt(static_cast<double>(draws.size()));
  CHECK(std::abs(m) < 4 * se);
  CHECK(std::abs(v - 1.0) < 0.06);
}

TEST_CASE("fits are reproducible and carry consistent metadata") {
  const Cohort c = generate_cohort(2, 300, paper_theta_true());
  const McmcConfig cfg = quick(60, 30);
  const FitResult a = fit(c, ModelKind::spm, PriorSpec{}, cfg);
  const FitResult b = fit(c, ModelKind::spm, PriorSpec{}, cfg);
  CHECK(a.draws == b.draws);
  McmcConfig threaded = cfg;
  threaded.workers = 2;
  CHECK(fit(c, ModelKind::spm, PriorSpec{}, threaded).draws == a.draws);
  CHECK(a.draw_count() == 60);
  CHECK(a.names.size() == static_cast<std::size_t>(a.draws.cols()));
  CHECK(a.names.size() == scalar_parameter_names(ModelKind::spm).size() + 20);
  CHECK(a.summary.size() == a.names.size());
  for (double s : column(a, "sigma_eps")) CHECK(s > 0.0);
  for (double s : column(a, "sigma_age")) CHECK(s > 0.0);
  // every retained f draw sums to zero
  for (Eigen::Index r = 0; r < a.draws.rows(); ++r)
    CHECK(std::abs(a.draws.row(r).segment(static_cast<Eigen::Index>(a.f_offset()), 20).sum()) < 1e-8);
  CHECK_FALSE(fit(c, ModelKind::naive, PriorSpec{}, cfg).has("c"));
}

TEST_CASE("thinning keeps every thin-th draw") {
  const Cohort c = generate_cohort(2, 100, paper_theta_true());
  McmcConfig cfg = quick(50, 10);
  cfg.thin = 3;
  const FitResult f = fit(c, ModelKind::naive, PriorSpec{}, cfg);
  CHECK(f.draw_count() == 2 * cfg.retained_per_chain());
  CHECK(cfg.retained_per_chain() == 14);
}

TEST_CASE("invalid configurations are rejected") {
  const Cohort c = generate_cohort(2, 50, paper_theta_true());
  McmcConfig cfg = quick(10, 10);
  CHECK_THROWS_AS(fit(c, ModelKind::spm, PriorSpec{}, cfg), ParameterError);
  cfg = quick(10, 5);
  cfg.chains = 0;
  CHECK_THROWS_AS(fit(c, ModelKind::spm, PriorSpec{}, cfg), ParameterError);
  cfg = quick(10, 5);
  cfg.age_knots = 2;
  CHECK_THROWS_AS(fit(c, ModelKind::spm, PriorSpec{}, cfg), ParameterError);
  CHECK_THROWS_AS(fit(Cohort{}, ModelKind::spm, PriorSpec{}, quick(10, 5)), DataError);
}

TEST_CASE("fixed hyperparameters are held") {
  const Cohort c = generate_cohort(2, 200, paper_theta_true());
  McmcConfig cfg = quick(40, 10);
  cfg.fixed_sigma_eps = 0.5;
  cfg.fixed_sigma_age = 0.2;
  const FitResult f = fit(c, ModelKind::spm, PriorSpec{}, cfg);
  for (double s : column(f, "sigma_eps")) CHECK(s == doctest::Approx(0.5));
  for (double s : column(f, "sigma_age")) CHECK(s == doctest::Approx(0.2));
}

TEST_CASE("the SPM with c pinned at zero matches the naive posterior") {
  const Cohort c = generate_cohort(6, 400, paper_theta_true());
  const McmcConfig cfg = quick(2500, 500, 9);
  PriorSpec pinned;
  pinned.c_sd = 1e-8;
  const FitResult spm = fit(c, ModelKind::spm, pinned, cfg);
  const FitResult naive = fit(c, ModelKind::naive, PriorSpec{}, quick(2500, 500, 10));
  for (const std::string name : {"alpha_0", "alpha_bp", "beta_0", "beta_bp"}) {
    const auto a = column(spm, name), b = column(naive, name);
    // effective sizes are well below the raw counts, so use a loose KS bound
    CAPTURE(name);
    CHECK(ks_statistic(a, b) < 0.12);
  }
}

TEST_CASE("variance-target priors run the Metropolis step") {
  const Cohort c = generate_cohort(3, 300, paper_theta_true());
  PriorSpec p;
  p.gamma_target = GammaTarget::variance;
  p.gamma_shape = 2.0;
  p.gamma_rate = 2.0;
  const FitResult f = fit(c, ModelKind::spm, p, quick(200, 100));
  for (double s : column(f, "sigma_age")) CHECK(s > 0.0);
}

TEST_CASE("age effect curve") {
  const Cohort c = generate_cohort(2, 200, paper_theta_true());
  const FitResult f = fit(c, ModelKind::naive, PriorSpec{}, quick(60, 20));
  const auto curve = age_effect_curve(f);
  REQUIRE(curve.grid.size() == 20);
  for (std::size_t k = 0; k < 20; ++k) {
    CHECK(curve.lower[k] <= curve.mean[k]);
    CHECK(curve.mean[k] <= curve.upper[k]);
    CHECK(curve.grid[k] == f.grid.knots()[k]);
  }
  const ParameterSet t = f.parameters(3);
  CHECK(t.alpha_0 == f.draws(3, 0));
  CHECK(t.f.size() == 20);
}
