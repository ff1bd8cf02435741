#pragma once
// The shared parameter model: a Gaussian submodel for future blood pressure
// and a logit submodel for dropout, linked by a per-participant effect eps
// that enters the dropout predictor scaled by the association c. The naive
// model is the same pair with c fixed at zero.

#include <span>
#include <string>
#include <vector>

#include "spm/cohort.hpp"

namespace spm {

enum class ModelKind { spm, naive };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

// Knots (standardized age) carrying the RW2 age effect of the dropout model.
// Values between knots are linearly interpolated.
class AgeGrid {
 public:
  struct Bracket {
    std::size_t lower = 0;  // f(z) = (1 - weight) * f[lower] + weight * f[lower + 1]
    double weight = 0.0;
  };

  AgeGrid() = default;
  explicit AgeGrid(std::vector<double> knots);
  static AgeGrid uniform(double lo, double hi, std::size_t count);

  std::size_t size() const { return knots_.size(); }
  bool empty() const { return knots_.empty(); }
  const std::vector<double>& knots() const { return knots_; }
  double lo() const { return knots_.front(); }
  double hi() const { return knots_.back(); }

  // Throws GridError when z lies outside [lo, hi].
  Bracket locate(double z) const;
  double interpolate(std::span<const double> values, double z) const;

 private:
  std::vector<double> knots_;
};

struct ParameterSet {
  static constexpr double sigma_bp = 0.001;

  double alpha_0 = 0.0, alpha_bp = 0.0, alpha_age = 0.0, alpha_bmi = 0.0, alpha_sex = 0.0;
  double beta_0 = 0.0, beta_bp = 0.0, beta_bmi = 0.0, beta_sex = 0.0;
  AgeGrid grid;
  std::vector<double> f;    // age effect at grid knots; sums to zero
  std::vector<double> eps;  // shared effects, one per participant (may be empty)
  double c = 0.0;
  double sigma_eps = 1.0;
  double sigma_age = 1.0;

  void validate() const;
  double age_effect(double age_std) const;
};

enum class GammaTarget { precision, variance };

struct PriorSpec {
  double coef_mean = 0.0;
  double coef_sd = 1e3;
  // Gamma(shape, rate) placed on 1/sigma^2 (precision target) or sigma^2
  // (variance target) of both sigma_eps and sigma_age.
  double gamma_shape = 1.0;
  double gamma_rate = 5e-5;
  GammaTarget gamma_target = GammaTarget::precision;
  double c_mean = 0.0;
  double c_sd = 1.0;

  void validate() const;
};

std::string to_string(GammaTarget target);
GammaTarget parse_gamma_target(const std::string& text);

double eta_bp(const ParameterSet& theta, const Participant& x, double eps);
double eta_m(const ParameterSet& theta, const Participant& x, double eps);

// One participant's term: Gaussian BP_F term (present only) + Bernoulli term.
double participant_log_likelihood(const ParameterSet& theta, const Participant& x, double eps);
// Sum over the cohort using theta.eps (one entry per participant).
double log_likelihood(const ParameterSet& theta, const Cohort& cohort);

// sum_m (f[m] - 2 f[m+1] + f[m+2])^2
double rw2_quadratic_form(std::span<const double> f);
// RW2 log density of f given sigma_age, with rank K - 2 normalization.
// Throws ConstraintError if f does not sum to zero within 1e-8.
double rw2_penalty(std::span<const double> f, double sigma_age);

double log_gamma_density(double x, double shape, double rate);

// Normal priors on the coefficients (and on c for the SPM), gamma priors on
// the two precisions (or variances), RW2 for f and N(0, sigma_eps^2) for
// each eps. Returns -inf for non-positive scales.
double log_prior(const ParameterSet& theta, const PriorSpec& priors, ModelKind kind);

}  // namespace spm
