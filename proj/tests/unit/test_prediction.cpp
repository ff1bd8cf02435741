#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "spm/errors.hpp"
#include "spm/inference.hpp"
#include "spm/prediction.hpp"
#include "spm/synth.hpp"

using namespace spm;

namespace {

// Fit result whose every draw equals theta (plus an optional jitter in
// alpha_0 so that draws differ).
FitResult point_fit(const ParameterSet& theta, const Standardization& st, std::size_t draws = 50,
                    ModelKind kind = ModelKind::spm) {
  FitResult f;
  f.model_kind = kind;
  f.standardization = st;
  f.grid = theta.grid;
  f.names = scalar_parameter_names(kind);
  for (std::size_t k = 0; k < theta.grid.size(); ++k) f.names.push_back(f_name(k));
  f.draws.resize(static_cast<Eigen::Index>(draws), static_cast<Eigen::Index>(f.names.size()));
  for (Eigen::Index r = 0; r < f.draws.rows(); ++r) {
    Eigen::Index j = 0;
    for (double v : {theta.alpha_0 + 0.001 * r, theta.alpha_bp, theta.alpha_age, theta.alpha_bmi, theta.alpha_sex,
                     theta.beta_0, theta.beta_bp, theta.beta_bmi, theta.beta_sex})
      f.draws(r, j++) = v;
    if (kind == ModelKind::spm) f.draws(r, j++) = theta.c;
    f.draws(r, j++) = theta.sigma_eps;
    f.draws(r, j++) = theta.sigma_age;
    for (double v : theta.f) f.draws(r, j++) = v;
  }
  return f;
}

struct Setup {
  Cohort cohort;
  ParameterSet theta;
  FitResult fit;
};

Setup make_setup(double c, std::size_t n = 200) {
  Setup s;
  s.theta = paper_theta_true();
  s.theta.c = c;
  s.cohort = generate_cohort(21, n, s.theta);
  s.theta = align_to_grid(s.theta, fitting_age_grid(s.cohort.standardization, 30));
  s.fit = point_fit(s.theta, s.cohort.standardization);
  return s;
}

// E[eps | m] by adaptive quadrature.
double eps_mean_oracle(double b, double c, double sigma, int m) {
  auto w = [&](double e) {
    const double p = 1.0 / (1.0 + std::exp(-(b + c * e)));
    return std::exp(-0.5 * e * e / (sigma * sigma)) * (m == 1 ? p : 1.0 - p);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double lim = 12.0 * sigma;
  const double num = gauss_kronrod<double, 61>::integrate([&](double e) { return e * w(e); }, -lim, lim, 15, 1e-13);
  const double den = gauss_kronrod<double, 61>::integrate(w, -lim, lim, 15, 1e-13);
  return num / den;
}

}  // namespace

TEST_CASE("gaussian crps closed form") {
  CHECK(crps_gaussian(0.0, 1.0, 0.0) == doctest::Approx(2.0 / std::sqrt(2 * std::numbers::pi) - 1.0 / std::sqrt(std::numbers::pi)));
  // far tail: crps approaches |y - mu| - sigma / sqrt(pi)
  CHECK(crps_gaussian(0.0, 1.0, 30.0) == doctest::Approx(30.0 - 1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK(crps_gaussian(1.0, 2.0, 3.0) == doctest::Approx(2.0 * crps_gaussian(0.0, 1.0, 1.0)));
  CHECK_THROWS_AS(crps_gaussian(0.0, 0.0, 1.0), ParameterError);
}

TEST_CASE("empirical crps small cases") {
  const double one[] = {0.0};
  CHECK(crps_empirical(one, 2.5) == doctest::Approx(2.5));
  const double two[] = {0.0, 1.0};
  // mean|X - y| = 0.5, mean|X - X'| over 4 ordered pairs = 0.5
  CHECK(crps_empirical(two, 0.0) == doctest::Approx(0.25));
  const double same[] = {1.0, 1.0, 1.0};
  CHECK(crps_empirical(same, 1.0) == 0.0);
  CHECK_THROWS_AS(crps_empirical(std::span<const double>{}, 0.0), ParameterError);
}

TEST_CASE("empirical crps matches the brute-force pair sum") {
  std::mt19937_64 g(7);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(37);
    for (double& v : x) v = nd(g);
    const double y = nd(g);
    double a = 0.0, b = 0.0;
    for (double xi : x) {
      a += std::abs(xi - y);
      for (double xj : x) b += std::abs(xi - xj);
    }
    const double n = static_cast<double>(x.size());
    CHECK(crps_empirical(x, y) == doctest::Approx(a / n - b / (2 * n * n)).epsilon(1e-12));
    // permutation invariance
    std::vector<double> shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), g);
    CHECK(crps_empirical(shuffled, y) == doctest::Approx(crps_empirical(x, y)).epsilon(1e-14));
    // scale equivariance
    std::vector<double> scaled = x;
    for (double& v : scaled) v *= 3.0;
    CHECK(crps_empirical(scaled, 3.0 * y) == doctest::Approx(3.0 * crps_empirical(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("empirical crps of a large normal sample approaches the closed form") {
  std::mt19937_64 g(8);
  std::normal_distribution<double> nd(0.5, 1.5);
  std::vector<double> x(200000);
  for (double& v : x) v = nd(g);
  CHECK(crps_empirical(x, 1.2) == doctest::Approx(crps_gaussian(0.5, 1.5, 1.2)).epsilon(0.01));
}

TEST_CASE("brier score") {
  const double p[] = {0.2, 0.9};
  const int m[] = {0, 1};
  CHECK(brier(p, m) == doctest::Approx(0.025));
  const double q[] = {1.0, 0.0};
  CHECK(brier(q, m) == 1.0);
  const int short_m[] = {1};
  CHECK_THROWS_AS(brier(p, short_m), ParameterError);
}

TEST_CASE("conditional eps mean agrees with quadrature") {
  const Setup s = make_setup(0.7);
  const Predictor pr(s.fit, PredictOptions{});
  for (double b : {-2.0, -0.3, 0.0, 1.5})
    for (double c : {-1.5, 0.4, 2.0})
      for (int m : {0, 1}) {
        CAPTURE(b);
        CAPTURE(c);
        CAPTURE(m);
        CHECK(std::abs(pr.conditional_eps_mean(b, c, 0.8, m) - eps_mean_oracle(b, c, 0.8, m)) < 1e-3);
      }
}

TEST_CASE("mean dropout probability integrates over eps") {
  const Setup s = make_setup(1.1);
  const Predictor pr(s.fit, PredictOptions{});
  using boost::math::quadrature::gauss_kronrod;
  for (std::size_t i = 0; i < 5; ++i) {
    const Participant& x = s.cohort.participants[i];
    const double sd = s.theta.sigma_eps;
    const double oracle = gauss_kronrod<double, 61>::integrate(
        [&](double e) { return logistic(eta_m(s.theta, x, 0.0) + s.theta.c * e) * normal_pdf(e / sd) / sd; },
        -12 * sd, 12 * sd, 15, 1e-13);
    CHECK(std::abs(pr.mean_dropout_probability(x) - oracle) < 1e-4);
  }
}

TEST_CASE("conditional samples match the tilted distribution") {
  const Setup s = make_setup(1.2);
  PredictOptions o;
  o.samples = 200000;
  const Predictor pr(s.fit, o);
  const Participant& x = s.cohort.participants[3];
  std::vector<double> bp, p, bpu, pu;
  pr.sample(x, Conditioning::missing, RngStream(4, 0), bp, p);
  pr.sample(x, Conditioning::unconditional, RngStream(4, 0), bpu, pu);
  double diff = 0.0, var = 0.0;
  for (std::size_t i = 0; i < bp.size(); ++i) diff += bp[i] - bpu[i];
  diff /= static_cast<double>(bp.size());
  for (double v : bpu) var += v * v;
  const double em = eta_m(s.theta, x, 0.0);
  const double expected = eps_mean_oracle(em, s.theta.c, s.theta.sigma_eps, 1);
  // both sample sets use the same draw schedule, so alpha terms cancel
  CHECK(std::abs(diff - expected) < 5 * s.theta.sigma_eps / std::sqrt(200000.0) + 2e-3);
  CHECK(pr.mean_bp_f(x, Conditioning::missing) > pr.mean_bp_f(x, Conditioning::unconditional));
  CHECK(pr.mean_bp_f(x, Conditioning::present) < pr.mean_bp_f(x, Conditioning::unconditional));
}

TEST_CASE("predictions are reproducible and share random numbers") {
  const Setup s = make_setup(0.7, 50);
  PredictOptions o;
  o.samples = 300;
  const auto a = predict(s.fit, s.cohort, Conditioning::missing, o);
  const auto b = predict(s.fit, s.cohort, Conditioning::missing, o);
  CHECK(a.bp_f == b.bp_f);
  CHECK(a.p == b.p);
  o.workers = 3;
  CHECK(predict(s.fit, s.cohort, Conditioning::missing, o).bp_f == a.bp_f);
  CHECK(a.ids.size() == 50);
  CHECK(a.samples() == 300);
  CHECK(a.notes.empty());
}

TEST_CASE("with c equal to zero conditioning changes nothing") {
  const Setup s = make_setup(0.0, 60);
  PredictOptions o;
  o.samples = 200;
  const auto u = predict(s.fit, s.cohort, Conditioning::unconditional, o);
  const auto m = predict(s.fit, s.cohort, Conditioning::missing, o);
  CHECK(u.bp_f == m.bp_f);
  CHECK(m.condition == Conditioning::unconditional);
  CHECK_FALSE(m.notes.empty());
  const auto mae = mae_comparison(s.fit, s.cohort, o);
  CHECK(mae.fell_back);
  CHECK(mae.difference == 0.0);
  // the naive model carries no c column at all
  const FitResult naive = point_fit(s.theta, s.cohort.standardization, 20, ModelKind::naive);
  CHECK(mae_comparison(naive, s.cohort, o).difference == 0.0);
}

TEST_CASE("scores cover present and missing groups") {
  const Setup s = make_setup(0.7, 300);
  PredictOptions o;
  o.samples = 400;
  const auto pred = predict(s.fit, s.cohort, Conditioning::unconditional, o);
  const ScoreReport r = score(pred, s.cohort);
  CHECK(r.n_present + r.n_missing == 300);
  REQUIRE(r.crps_missing.has_value());
  REQUIRE(r.crps_all.has_value());
  const double np = static_cast<double>(r.n_present), nm = static_cast<double>(r.n_missing);
  CHECK(*r.crps_all == doctest::Approx((np * r.crps_present + nm * *r.crps_missing) / (np + nm)));
  CHECK(r.brier_all == doctest::Approx((np * *r.brier_present + nm * *r.brier_missing) / (np + nm)));
  // streaming scores are identical to the materialized path
  const ScoreReport t = score_streaming(s.fit, s.cohort, o);
  CHECK(t.crps_present == r.crps_present);
  CHECK(t.brier_all == r.brier_all);

  // without oracle outcomes only present participants can be scored
  Cohort blind = s.cohort;
  for (auto& p : blind.participants) p.oracle_bp_f_std.reset();
  const ScoreReport b = score(pred, blind);
  CHECK_FALSE(b.crps_missing.has_value());
  CHECK(b.crps_present == r.crps_present);
}

TEST_CASE("prediction rejects mismatched standardization") {
  Setup s = make_setup(0.7, 20);
  Cohort other = s.cohort;
  other.standardization.age.mean += 1.0;
  CHECK_THROWS_AS(predict(s.fit, other, Conditioning::unconditional, PredictOptions{}), DataError);
  PredictOptions bad;
  bad.samples = 0;
  CHECK_THROWS_AS(Predictor(s.fit, bad), ParameterError);
  CHECK(parse_conditioning("1") == Conditioning::missing);
  CHECK_THROWS_AS(parse_conditioning("2"), ParameterError);
}
