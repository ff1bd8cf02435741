#include "spm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spm/errors.hpp"

namespace spm {
namespace {

// Shape of the true age effect: A * ((z - centre)^2 - mean over knots). The
// amplitude is calibrated so that the default cohort of 64385 participants
// has the HUNT2 dropout rate of 43.1%.
constexpr double kTruthGridLo = -2.5;
constexpr double kTruthGridHi = 3.5;
constexpr std::size_t kTruthGridKnots = 80;
constexpr double kAgeEffectCentre = -0.4;
constexpr double kAgeEffectAmplitude = 0.415;

double round_to_tenth(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

void CovariateGenConfig::validate() const {
  if (!(female_probability >= 0.0 && female_probability <= 1.0))
    throw ParameterError("female probability must lie in [0, 1]");
  if (std::abs(age_weights[0] + age_weights[1] - 1.0) > 1e-12)
    throw ParameterError("age mixture weights must sum to 1");
  if (!(bmi_scale > 0.0) || !(bp_scale > 0.0)) throw ParameterError("skew normal scales must be positive");
  if (!(age_sds[0] > 0.0) || !(age_sds[1] > 0.0)) throw ParameterError("age sds must be positive");
}

Cohort generate_covariates(const RngStream& rng, std::size_t n, const CovariateGenConfig& cfg,
                           const std::optional<Standardization>& reference) {
  if (n == 0) throw ParameterError("cannot generate an empty cohort");
  cfg.validate();

  Cohort cohort;
  cohort.participants.resize(n);
  std::vector<RngStream> streams;
  streams.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    streams.push_back(rng.substream(j));
    auto& p = cohort.participants[j];
    auto& r = streams.back();
    p.id = static_cast<std::int64_t>(j + 1);
    p.sex = r.uniform() < cfg.female_probability ? 0 : 1;
    p.age_years = round_to_tenth(sample_truncated_mixture_normal(
        r, cfg.age_weights, cfg.age_means, cfg.age_sds, cfg.age_lower, cfg.age_upper));
  }

  Standardization st;
  if (reference) {
    st = *reference;
  } else {
    double mean = 0.0;
    for (const auto& p : cohort.participants) mean += p.age_years;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& p : cohort.participants) ss += (p.age_years - mean) * (p.age_years - mean);
    st.age.mean = mean;
    st.age.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
    if (!(st.age.sd > 0.0)) st.age.sd = 1.0;
  }
  st.validate();
  cohort.standardization = st;

  for (std::size_t j = 0; j < n; ++j) {
    auto& p = cohort.participants[j];
    auto& r = streams[j];
    p.age_std = st.age.standardize(p.age_years);
    const SkewNormalParams bmi{cfg.bmi_intercept + cfg.bmi_age * p.age_std + cfg.bmi_sex * p.sex,
                               cfg.bmi_scale, cfg.bmi_shape};
    p.bmi_std = sample_skew_normal(r, bmi);
    const SkewNormalParams bp{cfg.bp_intercept + cfg.bp_sex * p.sex + cfg.bp_age * p.age_std +
                                  cfg.bp_bmi * p.bmi_std + cfg.bp_shift,
                              cfg.bp_scale, cfg.bp_shape};
    p.bp_i_std = sample_skew_normal(r, bp);
    p.m = 0;
    p.bp_f_std.reset();
    p.oracle_bp_f_std.reset();
  }
  return cohort;
}

Cohort simulate_responses(const RngStream& rng, Cohort cohort, const ParameterSet& theta) {
  if (!(theta.sigma_eps >= 0.0) || !std::isfinite(theta.sigma_eps))
    throw ParameterError("sigma_eps must be non-negative");
  if (theta.f.size() != theta.grid.size()) throw ParameterError("age effect length differs from grid size");

  for (std::size_t j = 0; j < cohort.size(); ++j) {
    auto& p = cohort.participants[j];
    RngStream r = rng.substream(j);
    const double eps = theta.sigma_eps > 0.0 ? sample_normal(r, 0.0, theta.sigma_eps) : 0.0;
    const double prob = logistic(eta_m(theta, p, eps));
    p.m = r.uniform() < prob ? 1 : 0;
    const double bp_f = eta_bp(theta, p, eps) + sample_normal(r, 0.0, ParameterSet::sigma_bp);
    p.oracle_bp_f_std = bp_f;
    if (p.m == 0)
      p.bp_f_std = bp_f;
    else
      p.bp_f_std.reset();
  }
  return cohort;
}

AgeGrid fitting_age_grid(const Standardization& standardization, std::size_t knots) {
  return AgeGrid::uniform(standardization.age.standardize(18.0),
                          standardization.age.standardize(105.0), knots);
}

ParameterSet paper_theta_true() {
  ParameterSet t;
  t.alpha_0 = 0.275;
  t.alpha_age = 0.244;
  t.alpha_bmi = 0.073;
  t.alpha_bp = 0.599;
  t.alpha_sex = 0.041;
  t.beta_0 = 0.567;
  t.beta_bmi = 0.087;
  t.beta_bp = 0.139;
  t.beta_sex = 0.292;
  t.sigma_age = 1.412;
  t.sigma_eps = 0.790;
  t.c = 0.705;

  t.grid = AgeGrid::uniform(kTruthGridLo, kTruthGridHi, kTruthGridKnots);
  t.f.resize(t.grid.size());
  double mean_sq = 0.0;
  for (double z : t.grid.knots()) mean_sq += (z - kAgeEffectCentre) * (z - kAgeEffectCentre);
  mean_sq /= static_cast<double>(t.grid.size());
  for (std::size_t k = 0; k < t.grid.size(); ++k) {
    const double d = t.grid.knots()[k] - kAgeEffectCentre;
    t.f[k] = kAgeEffectAmplitude * (d * d - mean_sq);
  }
  return t;
}

ParameterSet mar_theta(ParameterSet theta) {
  theta.c = 0.0;
  return theta;
}

Cohort generate_cohort(std::uint64_t seed, std::size_t n, const ParameterSet& theta, const CovariateGenConfig& cfg) {
  return simulate_responses(RngStream(seed, 2), generate_covariates(RngStream(seed, 1), n, cfg), theta);
}

ParameterSet align_to_grid(ParameterSet theta, const AgeGrid& grid) {
  if (theta.grid.empty()) {
    theta.grid = grid;
    theta.f.assign(grid.size(), 0.0);
    return theta;
  }
  std::vector<double> f(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double z = std::clamp(grid.knots()[k], theta.grid.lo(), theta.grid.hi());
    f[k] = theta.grid.interpolate(theta.f, z);
  }
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  for (double& v : f) v -= mean;
  theta.beta_0 += mean;
  theta.grid = grid;
  theta.f = std::move(f);
  return theta;
}

}  // namespace spm
