#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "spm/errors.hpp"
#include "spm/model.hpp"
#include "spm/random.hpp"
#include "spm/synth.hpp"

using namespace spm;

namespace {

Eigen::MatrixXd second_difference(std::size_t k) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k - 2), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, i) = 1, d(i, i + 1) = -2, d(i, i + 2) = 1;
  return d;
}

ParameterSet small_theta(std::size_t k = 10) {
  ParameterSet t = paper_theta_true();
  t.grid = AgeGrid::uniform(-3.0, 3.0, k);
  t.f.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) t.f[i] = 0.1 * std::sin(static_cast<double>(i));
  double m = 0.0;
  for (double v : t.f) m += v;
  for (double& v : t.f) v -= m / static_cast<double>(k);
  return t;
}

}  // namespace

TEST_CASE("RW2 quadratic form equals the dense matrix oracle") {
  const std::size_t k = 80;
  const Eigen::MatrixXd d = second_difference(k);
  const Eigen::MatrixXd r = d.transpose() * d;
  RngStream rng(8, 0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd f(k);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.normal() * 3.0;
    const double oracle = f.dot(r * f);
    const double got = rw2_quadratic_form(std::span<const double>(f.data(), k));
    CHECK(std::abs(got - oracle) <= 1e-10 * std::max(1.0, oracle));
  }
}

TEST_CASE("affine effects carry no RW2 penalty") {
  std::vector<double> f(80);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2.0 - 0.25 * static_cast<double>(i);
  CHECK(rw2_quadratic_form(f) == 0.0);
  std::vector<double> constant(80, 1.5);
  CHECK(rw2_quadratic_form(constant) == 0.0);
}

TEST_CASE("RW2 log density") {
  std::vector<double> f = {1.0, -2.0, 0.5, 0.5, 0.0};
  const double sigma = 0.7, q = rw2_quadratic_form(f), rank = 3.0;
  const double expected = -q / (2 * sigma * sigma) - rank / 2 * std::log(sigma * sigma) - rank / 2 * std::log(2 * M_PI);
  CHECK(rw2_penalty(f, sigma) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(rw2_penalty(f, 0.0) == -std::numeric_limits<double>::infinity());
  std::vector<double> unconstrained = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(rw2_penalty(unconstrained, 1.0), ConstraintError);
}

TEST_CASE("age grid location and interpolation") {
  const AgeGrid g({0.0, 1.0, 3.0});
  CHECK(g.locate(0.5).lower == 0);
  CHECK(g.locate(0.5).weight == doctest::Approx(0.5));
  CHECK(g.locate(3.0).lower == 1);
  CHECK(g.locate(3.0).weight == doctest::Approx(1.0));
  const std::vector<double> v = {0.0, 2.0, 6.0};
  CHECK(g.interpolate(v, 2.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(g.locate(3.5), GridError);
  CHECK_THROWS_AS(g.locate(-0.1), GridError);
  CHECK_THROWS_AS(AgeGrid({0.0, 0.0, 1.0}), ParameterError);
}

TEST_CASE("linear predictors are linear in the coefficient block") {
  const ParameterSet t = small_theta();
  Participant x;
  x.sex = 1;
  x.age_std = 0.37;
  x.bmi_std = -0.4;
  x.bp_i_std = 1.2;
  const double eps = 0.3, h = 1e-6;
  // finite-difference gradient vs design vector
  auto grad = [&](auto eta, double ParameterSet::*field) {
    ParameterSet up = t, dn = t;
    up.*field += h;
    dn.*field -= h;
    return (eta(up, x, eps) - eta(dn, x, eps)) / (2 * h);
  };
  CHECK(grad(eta_bp, &ParameterSet::alpha_0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grad(eta_bp, &ParameterSet::alpha_bp) == doctest::Approx(x.bp_i_std).epsilon(1e-8));
  CHECK(grad(eta_bp, &ParameterSet::alpha_age) == doctest::Approx(x.age_std).epsilon(1e-8));
  CHECK(grad(eta_bp, &ParameterSet::alpha_bmi) == doctest::Approx(x.bmi_std).epsilon(1e-8));
  CHECK(grad(eta_bp, &ParameterSet::alpha_sex) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grad(eta_m, &ParameterSet::beta_0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grad(eta_m, &ParameterSet::beta_bp) == doctest::Approx(x.bp_i_std).epsilon(1e-8));
  CHECK(grad(eta_m, &ParameterSet::beta_bmi) == doctest::Approx(x.bmi_std).epsilon(1e-8));
  CHECK(grad(eta_m, &ParameterSet::beta_sex) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(grad(eta_m, &ParameterSet::c) == doctest::Approx(eps).epsilon(1e-8));
}

TEST_CASE("log likelihood decomposes over participants") {
  ParameterSet t = small_theta();
  t.grid = AgeGrid::uniform(-3.0, 3.5, 10);
  Cohort c = generate_cohort(3, 40, paper_theta_true());
  t.eps.clear();
  RngStream r(1, 0);
  for (std::size_t i = 0; i < c.size(); ++i) t.eps.push_back(0.5 * r.normal());
  const double total = log_likelihood(t, c);
  Cohort minus = c;
  minus.participants.erase(minus.participants.begin() + 7);
  ParameterSet tm = t;
  tm.eps.erase(tm.eps.begin() + 7);
  CHECK(total - log_likelihood(tm, minus) ==
        doctest::Approx(participant_log_likelihood(t, c.participants[7], t.eps[7])).epsilon(1e-12));
  tm.eps.pop_back();
  CHECK_THROWS_AS(log_likelihood(tm, minus), ParameterError);
}

TEST_CASE("participant likelihood terms") {
  ParameterSet t = small_theta();
  Participant x;
  x.age_std = 0.0;
  x.bp_f_std = 0.4;
  const double eps = 0.1;
  const double expected = normal_logpdf(0.4, eta_bp(t, x, eps), ParameterSet::sigma_bp) + std::log(1 - logistic(eta_m(t, x, eps)));
  CHECK(participant_log_likelihood(t, x, eps) == doctest::Approx(expected).epsilon(1e-12));
  x.m = 1;
  x.bp_f_std.reset();
  CHECK(participant_log_likelihood(t, x, eps) == doctest::Approx(std::log(logistic(eta_m(t, x, eps)))).epsilon(1e-12));
  x.m = 0;
  CHECK_THROWS_AS(participant_log_likelihood(t, x, eps), DataError);
  x.bp_f_std = 0.4;
  x.bmi_std = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(participant_log_likelihood(t, x, eps), DataError);
}

TEST_CASE("naive model equals the SPM with c frozen at zero") {
  ParameterSet t = small_theta();
  t.grid = AgeGrid::uniform(-3.0, 3.5, 10);
  t.c = 0.0;
  const Cohort c = generate_cohort(5, 30, paper_theta_true());
  RngStream r(2, 0);
  for (std::size_t i = 0; i < c.size(); ++i) t.eps.push_back(r.normal());
  PriorSpec p;
  // the SPM prior differs by exactly the log N(0; c_mean, c_sd) term
  const double c_term = normal_logpdf(0.0, p.c_mean, p.c_sd);
  CHECK(log_prior(t, p, ModelKind::spm) - log_prior(t, p, ModelKind::naive) == doctest::Approx(c_term).epsilon(1e-12));
  CHECK(std::isfinite(log_likelihood(t, c)));
}

TEST_CASE("log prior pieces") {
  ParameterSet t = small_theta(5);
  t.alpha_0 = 3.0;
  PriorSpec p;
  ParameterSet z = t;
  z.alpha_0 = 0.0;
  CHECK(log_prior(t, p, ModelKind::naive) - log_prior(z, p, ModelKind::naive) ==
        doctest::Approx(-9.0 / (2 * 1e6)).epsilon(1e-9));
  ParameterSet bad = t;
  bad.sigma_eps = 0.0;
  CHECK(log_prior(bad, p, ModelKind::spm) == -std::numeric_limits<double>::infinity());
  // gamma on the precision vs on the variance
  PriorSpec pv = p;
  pv.gamma_target = GammaTarget::variance;
  CHECK(log_prior(t, p, ModelKind::spm) != log_prior(t, pv, ModelKind::spm));
}

TEST_CASE("gamma log density") {
  CHECK(log_gamma_density(2.0, 1.0, 0.5) == doctest::Approx(std::log(0.5) - 1.0).epsilon(1e-14));
  CHECK(log_gamma_density(1.5, 3.0, 2.0) ==
        doctest::Approx(3 * std::log(2.0) - std::lgamma(3.0) + 2 * std::log(1.5) - 3.0).epsilon(1e-14));
}

TEST_CASE("parameter and prior validation") {
  ParameterSet t = paper_theta_true();
  t.validate();
  t.sigma_age = -1.0;
  CHECK_THROWS_AS(t.validate(), ParameterError);
  PriorSpec p;
  p.c_sd = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK(parse_model_kind("naive") == ModelKind::naive);
  CHECK_THROWS_AS(parse_model_kind("other"), ParameterError);
  CHECK(parse_gamma_target(to_string(GammaTarget::variance)) == GammaTarget::variance);
}
