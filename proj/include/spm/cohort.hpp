#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spm {

struct VariableScale {
  double mean = 0.0;
  double sd = 1.0;

  double standardize(double raw) const { return (raw - mean) / sd; }
  double restore(double standardized) const { return mean + sd * standardized; }
};

// Per-variable (mean, sd) used to map raw values onto the model scale. The
// generator draws BMI, BP_I and BP_F directly on the model scale, so only the
// age entry differs from the identity for simulated cohorts.
struct Standardization {
  VariableScale bp_f;
  VariableScale bp_i;
  VariableScale age;
  VariableScale bmi;

  void validate() const;
};

struct Participant {
  std::int64_t id = 0;
  int sex = 0;  // 0 female, 1 male
  double age_std = 0.0;
  double bmi_std = 0.0;
  double bp_i_std = 0.0;
  std::optional<double> bp_f_std;  // absent exactly when m == 1
  int m = 0;                       // 1 when BP_F is missing
  double age_years = 0.0;
  // True outcome kept by the simulator for scoring dropouts; never used in fits.
  std::optional<double> oracle_bp_f_std;

  bool missing() const { return m == 1; }
  // Observed value if present, otherwise the oracle value (if any).
  std::optional<double> outcome_for_scoring() const;
};

struct Cohort {
  std::vector<Participant> participants;
  Standardization standardization;

  std::size_t size() const { return participants.size(); }
  bool empty() const { return participants.empty(); }
  bool has_oracle() const;
  std::size_t missing_count() const;
  // Throws DataError on any invariant violation (m flag vs outcome, bounds, NaNs).
  void validate() const;
};

struct GroupSummary {
  std::size_t count = 0;
  double proportion = 0.0;
  // Absent when the group is empty (mean) or holds a single participant (sd).
  std::optional<double> mean_bp_f, sd_bp_f;
  std::optional<double> mean_bp_i, sd_bp_i;
  std::optional<double> mean_age, sd_age;
  std::optional<double> mean_bmi, sd_bmi;
  std::optional<double> female_fraction;
};

struct CohortSummary {
  GroupSummary all;
  GroupSummary present;
  GroupSummary missing;
};

// Means and sds of the standardized variables, overall and by missing status.
// BP_F statistics use observed values only.
CohortSummary summarize_cohort(const Cohort& cohort);

}  // namespace spm
