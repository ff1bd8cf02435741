#pragma once
// Synthetic HUNT2/HUNT3-like cohorts: covariates from the published
// regressions and MNAR responses from a known parameter set.

#include <cstdint>
#include <optional>

#include "spm/cohort.hpp"
#include "spm/model.hpp"
#include "spm/random.hpp"

namespace spm {

struct CovariateGenConfig {
  double female_probability = 0.5303;

  double age_weights[2] = {0.75, 0.25};
  double age_means[2] = {43.0, 75.0};
  double age_sds[2] = {15.0, 7.0};
  double age_lower = 18.0;
  double age_upper = 105.0;

  // BMI ~ SN(bmi_intercept + bmi_age * age + bmi_sex * sex, bmi_scale, bmi_shape)
  double bmi_intercept = -0.023;
  double bmi_age = 0.191;
  double bmi_sex = 0.05;
  double bmi_scale = 0.9;
  double bmi_shape = 1.5;

  // BP_I ~ SN(bp_intercept + bp_sex * sex + bp_age * age + bp_bmi * BMI + bp_shift,
  //           bp_scale, bp_shape)
  double bp_intercept = -0.078;
  double bp_sex = 0.167;
  double bp_age = 0.516;
  double bp_bmi = 0.186;
  double bp_shift = -0.15;
  double bp_scale = 0.6;
  double bp_shape = 3.0;

  void validate() const;
};

// Draws n participants without responses. Each participant uses its own
// substream of `rng`, so the result does not depend on evaluation order.
// Age is standardized with `reference` when given (e.g. training-cohort
// constants for a validation cohort), otherwise with the cohort's own mean
// and sd.
Cohort generate_covariates(const RngStream& rng, std::size_t n, const CovariateGenConfig& cfg,
                           const std::optional<Standardization>& reference = std::nullopt);

// Fills eps, BP_F and m for every participant from `theta`:
//   eps ~ N(0, sigma_eps^2), BP_F ~ N(eta_bp + eps, sigma_bp^2), m ~ Bernoulli(logistic(eta_m + c eps)).
// theta.sigma_eps may be zero (degenerate noise). The true BP_F is always
// kept as the oracle outcome; the observed value is cleared for dropouts.
Cohort simulate_responses(const RngStream& rng, Cohort cohort, const ParameterSet& theta);

// Grid used for fitting: `knots` equally spaced points spanning the admissible
// age range [18, 105] years on the cohort's standardized scale.
AgeGrid fitting_age_grid(const Standardization& standardization, std::size_t knots = 80);

// Parameter set used as the simulation truth: posterior means of the SPM fit
// to HUNT2 for every scalar, and a U-shaped age effect on a standardized grid.
ParameterSet paper_theta_true();

// Same truth with c = 0 (data missing at random).
ParameterSet mar_theta(ParameterSet theta);

inline constexpr std::uint64_t kDefaultSeed = 20240101;

// Covariates from stream 1 of `seed` and responses from stream 2.
Cohort generate_cohort(std::uint64_t seed, std::size_t n, const ParameterSet& theta,
                       const CovariateGenConfig& cfg = {});

// Re-expresses theta on another grid: f is interpolated onto the new knots
// (clamped to theta's grid) and re-centred, the removed mean moving into
// beta_0. The dropout predictor is unchanged inside theta's grid, so this is
// the truth a fit on `grid` estimates.
ParameterSet align_to_grid(ParameterSet theta, const AgeGrid& grid);

}  // namespace spm
