#pragma once
// Simulation studies: bias and coverage, predictive comparison, the MNAR
// check and prior sensitivity for c.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spm/inference.hpp"
#include "spm/prediction.hpp"
#include "spm/synth.hpp"

namespace spm {

enum class StudyKind { bias_coverage, prediction, mnar_check, prior_sensitivity };
enum class Regime { mnar, mar };

std::string to_string(StudyKind kind);
StudyKind parse_study_kind(const std::string& text);
std::string to_string(Regime regime);
Regime parse_regime(const std::string& text);

struct PriorVariant {
  std::string label;
  double c_mean = 0.0;
  double c_sd = 1.0;
};

// N(0,1), N(0,10^2), N(0,100^2), N(1,1), N(1,10^2), N(1,100^2), N(10,100^2)
std::vector<PriorVariant> default_prior_variants();

struct StudyConfig {
  StudyKind kind = StudyKind::bias_coverage;
  std::size_t replicates = 20;
  std::size_t n_train = 8000;
  std::size_t n_valid = 6000;
  ParameterSet theta = paper_theta_true();
  Regime regime = Regime::mnar;
  std::vector<PriorVariant> prior_variants = default_prior_variants();
  PriorSpec priors;
  McmcConfig mcmc;
  PredictOptions predict;
  CovariateGenConfig covariates;
  std::uint64_t seed = kDefaultSeed;
  std::size_t workers = 1;  // concurrent replicates
  bool record_timing = false;

  void validate() const;

  // Desk scale: n_train 8000, n_valid 6000, R = 20, short chains.
  static StudyConfig desk(StudyKind kind);
  // Full scale: n_train 64385, n_valid 50201, R = 100, default chains.
  static StudyConfig full(StudyKind kind);
};

// Truth after re-centring the age effect on the fitting grid.
ParameterSet regime_truth(const StudyConfig& cfg, Regime regime, const AgeGrid& grid);

struct ReplicateRecord {
  std::size_t replicate = 0;
  Regime regime = Regime::mnar;
  ModelKind model = ModelKind::spm;
  std::string variant;  // prior sensitivity only
  bool failed = false;
  std::string error;
  std::vector<ParameterSummary> parameters;  // scalar parameters
  std::vector<std::string> warnings;
  std::optional<ScoreReport> scores;
  std::optional<MaeComparison> mae;
  std::optional<AgeEffectCurve> age_curve;

  const ParameterSummary* find(const std::string& name) const;
};

struct TruthEntry {
  Regime regime = Regime::mnar;
  std::string parameter;
  std::optional<double> value;  // absent when the fit's scale is not comparable
};

struct AggregateRow {
  Regime regime = Regime::mnar;
  ModelKind model = ModelKind::spm;
  std::string parameter;
  std::optional<double> truth;
  double mean = 0.0;  // mean of posterior means
  std::optional<double> bias;
  std::optional<double> coverage;
  std::size_t count = 0;
};

struct BiasDifferenceRow {
  Regime regime = Regime::mnar;
  std::string parameter;
  double difference = 0.0;     // bias_spm - bias_naive
  double abs_reduction = 0.0;  // |bias_naive| - |bias_spm|
};

struct StudyReport {
  static constexpr int kSchemaVersion = 1;
  StudyKind kind = StudyKind::bias_coverage;
  StudyConfig config;
  std::vector<TruthEntry> truth;
  std::vector<ReplicateRecord> records;
  std::vector<AggregateRow> aggregates;
  std::vector<BiasDifferenceRow> bias_differences;
  std::size_t failed = 0;
  std::optional<double> runtime_seconds;

  const AggregateRow* aggregate(Regime regime, ModelKind model, const std::string& parameter) const;
};

StudyReport run_bias_coverage(const StudyConfig& cfg);
StudyReport run_prediction_study(const StudyConfig& cfg);
StudyReport run_mnar_check(const StudyConfig& cfg);
StudyReport run_prior_sensitivity(const StudyConfig& cfg);
StudyReport run_study(const StudyConfig& cfg);

// Mean posterior mean, bias and coverage over the successful replicates.
void aggregate_bias_coverage(StudyReport& report);

// Coverage rate of intervals against a truth: the share of (lower, upper)
// pairs containing it.
double coverage_rate(const std::vector<std::pair<double, double>>& intervals, double truth);

struct ScoreDifference {
  std::size_t replicate = 0;
  double crps_all = 0.0, crps_present = 0.0, crps_missing = 0.0;
  double brier_all = 0.0, brier_present = 0.0, brier_missing = 0.0;
};

// SPM - naive per replicate (prediction study).
std::vector<ScoreDifference> score_differences(const StudyReport& report);

// MAE(conditional) - MAE(unconditional) per replicate of one regime.
std::vector<double> mae_differences(const StudyReport& report, Regime regime);

struct MnarCheckSummary {
  bool mnar_all_negative = false;
  bool mar_covers_zero = false;
  bool disjoint = false;
};
MnarCheckSummary summarize_mnar_check(const StudyReport& report);

struct PriorSensitivitySummary {
  bool intervals_overlap = false;  // every coefficient, every pair of variants
  std::string worst_pair;          // first non-overlapping pair, if any
  double max_curve_gap = 0.0;
  double curve_range = 0.0;        // range of the variant-averaged curve
};
PriorSensitivitySummary summarize_prior_sensitivity(const StudyReport& report);

// Names of the coefficient block (BP and dropout coefficients).
std::vector<std::string> coefficient_names();

}  // namespace spm
