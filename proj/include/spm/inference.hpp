#pragma once
// MCMC fitting of the SPM and the naive model.
//
// The sampler is a blocked Gibbs sweep made fully conjugate by Polya-Gamma
// augmentation of the dropout likelihood:
//   1. omega_i ~ PG(1, eta_m,i)
//   2. BP coefficients | rest, with eps integrated out (Gaussian)
//   3. eps_i | BP coefficients, rest (Gaussian, per participant)
//   4. (beta, c, f) | eps, omega (Gaussian, sum-to-zero by conditioning)
//   5. precisions of eps and f (gamma), or a Metropolis step on log-variance
//      when the gamma prior is placed on the variance.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spm/cohort.hpp"
#include "spm/model.hpp"

namespace spm {

struct McmcConfig {
  std::size_t iterations = 5000;
  std::size_t warmup = 2500;
  std::size_t chains = 4;
  std::size_t thin = 1;
  // Step-size adaptation of the Metropolis updates (variance-target priors).
  std::size_t adaptation_window = 50;
  double target_acceptance = 0.44;
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // 0: one thread per core
  std::size_t age_knots = 80;

  // Drop every likelihood term (prior sampling).
  bool prior_only = false;
  // Hold hyperparameters fixed instead of sampling them.
  std::optional<double> fixed_sigma_eps;
  std::optional<double> fixed_sigma_age;

  void validate() const;
  std::size_t retained_per_chain() const { return (iterations - warmup + thin - 1) / thin; }
};

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;  // 2.5% percentile
  double upper = 0.0;  // 97.5% percentile
  double rhat = 1.0;
  double ess = 0.0;
};

struct AgeEffectCurve {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct FitResult {
  ModelKind model_kind = ModelKind::spm;
  PriorSpec priors;
  McmcConfig config;
  Standardization standardization;
  AgeGrid grid;
  std::vector<std::string> names;  // one per draws column
  Eigen::MatrixXd draws;           // retained draws, chain-major rows
  std::size_t chains = 1;
  std::vector<ParameterSummary> summary;
  bool rhat_warning = false;
  std::vector<std::string> warnings;

  std::size_t draw_count() const { return static_cast<std::size_t>(draws.rows()); }
  // Column of a named parameter; throws ParameterError if absent.
  std::size_t column(const std::string& name) const;
  bool has(const std::string& name) const;
  std::size_t f_offset() const;
  // Parameter set of retained draw s (eps left empty).
  ParameterSet parameters(std::size_t s) const;
  const ParameterSummary& summary_of(const std::string& name) const;
};

// Names of the scalar parameters in column order (f[k] columns follow).
std::vector<std::string> scalar_parameter_names(ModelKind kind);
std::string f_name(std::size_t k);

FitResult fit(const Cohort& cohort, ModelKind kind, const PriorSpec& priors, const McmcConfig& cfg);

// Mean, sd, equal-tailed 95% interval, split-Rhat and ESS for every column.
std::vector<ParameterSummary> summarize_draws(const std::vector<std::string>& names,
                                              const Eigen::MatrixXd& draws, std::size_t chains);
std::vector<ParameterSummary> posterior_summary(const FitResult& fit);

AgeEffectCurve age_effect_curve(const FitResult& fit);

}  // namespace spm
