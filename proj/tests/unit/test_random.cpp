#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "spm/errors.hpp"
#include "spm/random.hpp"

using namespace spm;
using boost::math::quadrature::gauss_kronrod;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// One-sample KS statistic against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST_CASE("same seed and stream reproduce the sequence") {
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  RngStream c(42, 3);
  RngStream d = c;
  c.uniform();
  // substreams depend on identity only, not on position
  for (int i = 0; i < 10; ++i) CHECK(c.substream(5).uniform() == d.substream(5).uniform());
}

TEST_CASE("distinct streams are uncorrelated") {
  RngStream a(7, 0), b(7, 1);
  const int n = 200000;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform() - 0.5, y = b.uniform() - 0.5;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double r = sab / std::sqrt(saa * sbb);
  CHECK(std::abs(r) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("uniform lies in the open unit interval") {
  RngStream r(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("sample_normal moments") {
  RngStream r(11, 0);
  std::vector<double> a(1000000), b(1000000);
  for (auto& x : a) x = sample_normal(r, 0.0, 1.0);
  for (auto& x : b) x = sample_normal(r, 43.0, 15.0);
  CHECK(std::abs(mean_of(a)) < 0.01);
  CHECK(std::abs(sd_of(b) - 15.0) < 0.1);
  CHECK_THROWS_AS(sample_normal(r, 0.0, 0.0), ParameterError);
  CHECK_THROWS_AS(sample_normal(r, 0.0, -1.0), ParameterError);
}

TEST_CASE("gamma draws have the requested mean and variance") {
  RngStream r(5, 2);
  const double shape = 3.0, rate = 2.0;
  std::vector<double> v(400000);
  for (auto& x : v) x = r.gamma(shape, rate);
  CHECK(mean_of(v) == doctest::Approx(shape / rate).epsilon(0.01));
  CHECK(sd_of(v) == doctest::Approx(std::sqrt(shape) / rate).epsilon(0.01));
}

TEST_CASE("skew normal with zero shape is the normal distribution") {
  const SkewNormalParams p{0.0, 1.0, 0.0};
  double worst = 0.0;
  for (double x = -6.0; x <= 6.0; x += 0.01) worst = std::max(worst, std::abs(skew_normal_pdf(x, p) - normal_pdf(x)));
  CHECK(worst <= 1e-12);

  RngStream r(3, 0);
  std::vector<double> v(100000);
  for (auto& x : v) x = sample_skew_normal(r, p);
  const double d = ks_statistic(v, [](double x) { return normal_cdf(x); });
  // asymptotic 1% critical value of the one-sample statistic
  CHECK(d < 1.628 / std::sqrt(static_cast<double>(v.size())));
}

TEST_CASE("skew normal mean: formula, quadrature and Monte Carlo agree") {
  const SkewNormalParams p{0.0, 1.0, 1.5};
  const double delta = 1.5 / std::sqrt(1.0 + 1.5 * 1.5);
  const double analytic = delta * std::sqrt(2.0 / std::numbers::pi);
  CHECK(analytic == doctest::Approx(0.664).epsilon(0.001));
  const double integral = gauss_kronrod<double, 61>::integrate([&](double x) { return x * skew_normal_pdf(x, p); },
                                                               -std::numeric_limits<double>::infinity(),
                                                               std::numeric_limits<double>::infinity(), 15, 1e-12);
  CHECK(integral == doctest::Approx(analytic).epsilon(1e-9));
  CHECK(p.mean() == doctest::Approx(analytic).epsilon(1e-12));
  const double mass = gauss_kronrod<double, 61>::integrate([&](double x) { return skew_normal_pdf(x, p); },
                                                           -std::numeric_limits<double>::infinity(),
                                                           std::numeric_limits<double>::infinity(), 15, 1e-12);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));

  RngStream r(19, 0);
  std::vector<double> v(1000000);
  for (auto& x : v) x = sample_skew_normal(r, p);
  CHECK(std::abs(mean_of(v) - analytic) < 4.0 * sd_of(v) / 1000.0);
}

TEST_CASE("skew normal histogram matches its density") {
  const SkewNormalParams p{0.5, 0.6, 3.0};
  RngStream r(23, 0);
  const int n = 200000, bins = 40;
  const double lo = 0.0, hi = 2.5, w = (hi - lo) / bins;
  std::vector<double> count(bins, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = sample_skew_normal(r, p);
    if (x >= lo && x < hi) count[static_cast<std::size_t>((x - lo) / w)] += 1.0;
  }
  double chi2 = 0.0;
  int used = 0;
  for (int b = 0; b < bins; ++b) {
    const double e = n * gauss_kronrod<double, 15>::integrate([&](double x) { return skew_normal_pdf(x, p); },
                                                              lo + b * w, lo + (b + 1) * w);
    if (e < 20) continue;
    chi2 += (count[b] - e) * (count[b] - e) / e;
    ++used;
  }
  // 99.9% point of chi-square with ~40 degrees of freedom is about 73.4
  CHECK(chi2 < 80.0);
  CHECK(used > 20);
}

TEST_CASE("skew normal with positive shape is right skewed") {
  const SkewNormalParams p{0.0, 0.6, 3.0};
  RngStream r(29, 0);
  std::vector<double> v(100000);
  for (auto& x : v) x = sample_skew_normal(r, p);
  const double m = mean_of(v), s = sd_of(v);
  double g = 0.0;
  for (double x : v) g += std::pow((x - m) / s, 3);
  CHECK(g / static_cast<double>(v.size()) > 0.0);
  CHECK_THROWS_AS(sample_skew_normal(r, SkewNormalParams{0.0, 0.0, 1.0}), ParameterError);
}

TEST_CASE("truncated mixture matches an independent implementation of the rule") {
  const double w[] = {0.75, 0.25}, mu[] = {43.0, 75.0}, sd[] = {15.0, 7.0};
  // Oracle: same rule coded directly on std::mt19937_64.
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> norm(0.0, 1.0);
  double oracle = 0.0;
  const int n_oracle = 10000000;
  for (int i = 0; i < n_oracle; ++i) {
    int k = unif(gen) < 0.75 ? 0 : 1;
    double x = mu[k] + sd[k] * norm(gen);
    while (x < 18.0 || x > 105.0) {
      k = x < 18.0 ? 0 : 1;
      x = mu[k] + sd[k] * norm(gen);
    }
    oracle += x;
  }
  oracle /= n_oracle;

  RngStream r(1, 9);
  double m = 0.0;
  const int n = 1000000;
  bool inside = true;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_mixture_normal(r, w, mu, sd, 18.0, 105.0);
    inside = inside && x >= 18.0 && x <= 105.0;
    m += x;
  }
  CHECK(inside);
  CHECK(std::abs(m / n - oracle) < 0.3);
}

TEST_CASE("degenerate mixture is a truncated normal") {
  const double w[] = {1.0, 0.0}, mu[] = {43.0, 75.0}, sd[] = {15.0, 7.0};
  RngStream r(4, 4);
  std::vector<double> v(200000);
  for (auto& x : v) x = sample_truncated_mixture_normal(r, w, mu, sd, 18.0, 105.0);
  const double lo = normal_cdf((18.0 - 43.0) / 15.0), hi = normal_cdf((105.0 - 43.0) / 15.0);
  const double d = ks_statistic(v, [&](double x) { return (normal_cdf((x - 43.0) / 15.0) - lo) / (hi - lo); });
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(v.size())));
}

TEST_CASE("truncated mixture rejects bad components") {
  RngStream r(1, 1);
  const double bad_w[] = {0.5, 0.4}, mu[] = {0.0, 1.0}, sd[] = {1.0, 1.0};
  CHECK_THROWS(sample_truncated_mixture_normal(r, bad_w, mu, sd, -1.0, 1.0));
  CHECK_THROWS(sample_truncated_mixture_normal(r, std::span<const double>{}, std::span<const double>{},
                                               std::span<const double>{}, -1.0, 1.0));
  const double w[] = {0.5, 0.5};
  CHECK_THROWS(sample_truncated_mixture_normal(r, w, mu, sd, 1.0, -1.0));
}

TEST_CASE("logistic and logit") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logit(0.5) == 0.0);
  for (double x : {-10.0, -1.0, 0.0, 1.0, 10.0}) CHECK(std::abs(logit(logistic(x)) - x) < 1e-12);
  CHECK_THROWS_AS(logit(0.0), DomainError);
  CHECK_THROWS_AS(logit(1.0), DomainError);
  CHECK(log_logistic(-800.0) == doctest::Approx(-800.0));
  CHECK(std::isfinite(log_logistic(800.0)));
}

TEST_CASE("normal cdf and pdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::abs(normal_pdf(0.0) - 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 1e-15);
  const double integral = 0.5 + gauss_kronrod<double, 61>::integrate([](double x) { return normal_pdf(x); }, 0.0,
                                                                     1.959964, 10, 1e-14);
  CHECK(std::abs(normal_cdf(1.959964) - integral) < 1e-12);
  CHECK(std::abs(normal_cdf(1.959964) - 0.975) < 1e-6);
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
}
