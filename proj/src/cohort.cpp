#include "spm/cohort.hpp"

#include <cmath>
#include <string>

#include "spm/errors.hpp"

namespace spm {

void Standardization::validate() const {
  for (const VariableScale* s : {&bp_f, &bp_i, &age, &bmi})
    if (!(s->sd > 0.0) || !std::isfinite(s->mean))
      throw DataError("standardization: every sd must be positive and means finite");
}

std::optional<double> Participant::outcome_for_scoring() const {
  if (bp_f_std) return bp_f_std;
  return oracle_bp_f_std;
}

bool Cohort::has_oracle() const {
  for (const auto& p : participants)
    if (p.oracle_bp_f_std) return true;
  return false;
}

std::size_t Cohort::missing_count() const {
  std::size_t k = 0;
  for (const auto& p : participants) k += p.missing() ? 1 : 0;
  return k;
}

void Cohort::validate() const {
  standardization.validate();
  for (const auto& p : participants) {
    const std::string who = "participant " + std::to_string(p.id);
    if (p.m != 0 && p.m != 1) throw DataError(who + ": m must be 0 or 1");
    if (p.sex != 0 && p.sex != 1) throw DataError(who + ": sex must be 0 or 1");
    if (p.m == 1 && p.bp_f_std) throw DataError(who + ": missing participant carries BP_F");
    if (p.m == 0 && !p.bp_f_std) throw DataError(who + ": present participant lacks BP_F");
    if (!std::isfinite(p.age_std) || !std::isfinite(p.bmi_std) || !std::isfinite(p.bp_i_std))
      throw DataError(who + ": non-finite covariate");
    if (!(p.age_years >= 18.0 && p.age_years <= 105.0))
      throw DataError(who + ": age_years outside [18, 105]");
  }
}

namespace {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void put(std::optional<double>& mu, std::optional<double>& sd) const {
    if (n >= 1) mu = mean;
    if (n >= 2) sd = std::sqrt(m2 / static_cast<double>(n - 1));
  }
};

GroupSummary summarize(const Cohort& cohort, int group) {
  Moments bpf, bpi, age, bmi;
  std::size_t females = 0, count = 0;
  for (const auto& p : cohort.participants) {
    if (group >= 0 && p.m != group) continue;
    ++count;
    if (p.bp_f_std) bpf.add(*p.bp_f_std);
    bpi.add(p.bp_i_std);
    age.add(p.age_std);
    bmi.add(p.bmi_std);
    females += p.sex == 0 ? 1 : 0;
  }
  GroupSummary g;
  g.count = count;
  g.proportion = cohort.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(cohort.size());
  bpf.put(g.mean_bp_f, g.sd_bp_f);
  bpi.put(g.mean_bp_i, g.sd_bp_i);
  age.put(g.mean_age, g.sd_age);
  bmi.put(g.mean_bmi, g.sd_bmi);
  if (count > 0) g.female_fraction = static_cast<double>(females) / static_cast<double>(count);
  return g;
}

}  // namespace

CohortSummary summarize_cohort(const Cohort& cohort) {
  if (cohort.empty()) throw DataError("cannot summarize an empty cohort");
  return {summarize(cohort, -1), summarize(cohort, 0), summarize(cohort, 1)};
}

}  // namespace spm
