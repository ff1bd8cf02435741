#include "spm/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "spm/errors.hpp"
#include "spm/parallel.hpp"

namespace spm {

std::string to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::bias_coverage: return "bias-coverage";
    case StudyKind::prediction: return "prediction";
    case StudyKind::mnar_check: return "mnar-check";
    case StudyKind::prior_sensitivity: return "prior-sensitivity";
  }
  return "bias-coverage";
}

StudyKind parse_study_kind(const std::string& text) {
  if (text == "bias-coverage") return StudyKind::bias_coverage;
  if (text == "prediction") return StudyKind::prediction;
  if (text == "mnar-check") return StudyKind::mnar_check;
  if (text == "prior-sensitivity") return StudyKind::prior_sensitivity;
  throw ParameterError("unknown study kind '" + text + "'");
}

std::string to_string(Regime regime) { return regime == Regime::mnar ? "mnar" : "mar"; }

Regime parse_regime(const std::string& text) {
  if (text == "mnar") return Regime::mnar;
  if (text == "mar") return Regime::mar;
  throw ParameterError("unknown regime '" + text + "'");
}

std::vector<PriorVariant> default_prior_variants() {
  return {{"N(0,1)", 0.0, 1.0},    {"N(0,10^2)", 0.0, 10.0}, {"N(0,100^2)", 0.0, 100.0},
          {"N(1,1)", 1.0, 1.0},    {"N(1,10^2)", 1.0, 10.0}, {"N(1,100^2)", 1.0, 100.0},
          {"N(10,100^2)", 10.0, 100.0}};
}

void StudyConfig::validate() const {
  if (replicates < 1) throw ParameterError("study: at least one replicate is required");
  if (n_train < 2) throw ParameterError("study: training cohort is too small");
  if ((kind == StudyKind::prediction || kind == StudyKind::mnar_check) && n_valid < 2)
    throw ParameterError("study: validation cohort is too small");
  if (kind == StudyKind::prior_sensitivity && prior_variants.empty())
    throw ParameterError("study: prior sensitivity needs at least one prior variant");
  for (const auto& v : prior_variants)
    if (!(v.c_sd > 0.0)) throw ParameterError("study: prior variant '" + v.label + "' has non-positive sd");
  theta.validate();
  priors.validate();
  mcmc.validate();
  predict.validate();
  covariates.validate();
}

StudyConfig StudyConfig::desk(StudyKind kind) {
  StudyConfig c;
  c.kind = kind;
  c.replicates = 20;
  c.n_train = 8000;
  c.n_valid = 6000;
  c.mcmc.iterations = 1200;
  c.mcmc.warmup = 600;
  c.mcmc.chains = 2;
  c.predict.samples = 1000;
  return c;
}

StudyConfig StudyConfig::full(StudyKind kind) {
  StudyConfig c;
  c.kind = kind;
  c.replicates = 100;
  c.n_train = 64385;
  c.n_valid = 50201;
  c.predict.samples = 4000;
  return c;
}

ParameterSet regime_truth(const StudyConfig& cfg, Regime regime, const AgeGrid& grid) {
  ParameterSet t = regime == Regime::mar ? mar_theta(cfg.theta) : cfg.theta;
  return align_to_grid(std::move(t), grid);
}

const ParameterSummary* ReplicateRecord::find(const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

const AggregateRow* StudyReport::aggregate(Regime regime, ModelKind model, const std::string& parameter) const {
  for (const auto& a : aggregates)
    if (a.regime == regime && a.model == model && a.parameter == parameter) return &a;
  return nullptr;
}

std::vector<std::string> coefficient_names() {
  return {"alpha_0", "alpha_bp", "alpha_age", "alpha_bmi", "alpha_sex",
          "beta_0",  "beta_bp",  "beta_bmi",  "beta_sex"};
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<TruthEntry> truth_entries(const ParameterSet& t, Regime regime) {
  return {{regime, "alpha_0", t.alpha_0},     {regime, "alpha_bp", t.alpha_bp}, {regime, "alpha_age", t.alpha_age},
          {regime, "alpha_bmi", t.alpha_bmi}, {regime, "alpha_sex", t.alpha_sex}, {regime, "beta_0", t.beta_0},
          {regime, "beta_bp", t.beta_bp},     {regime, "beta_bmi", t.beta_bmi}, {regime, "beta_sex", t.beta_sex},
          {regime, "c", t.c},                 {regime, "sigma_eps", t.sigma_eps},
          // The RW2 scale depends on knot spacing; not comparable across grids.
          {regime, "sigma_age", std::nullopt}};
}

McmcConfig replicate_mcmc(const StudyConfig& cfg, std::uint64_t key) {
  McmcConfig m = cfg.mcmc;
  m.seed = mix_keys(cfg.mcmc.seed, key);
  if (resolve_workers(cfg.workers) > 1) m.workers = 1;
  return m;
}

std::vector<ParameterSummary> scalar_summaries(const FitResult& f) {
  std::vector<ParameterSummary> out;
  for (const auto& name : scalar_parameter_names(f.model_kind)) out.push_back(f.summary_of(name));
  return out;
}

void fill_from_fit(ReplicateRecord& r, const FitResult& f) {
  r.parameters = scalar_summaries(f);
  r.warnings = f.warnings;
}

template <class Fn>
void guarded(ReplicateRecord& r, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
}

void finish(StudyReport& report, Clock::time_point start) {
  report.failed = static_cast<std::size_t>(
      std::count_if(report.records.begin(), report.records.end(), [](const auto& r) { return r.failed; }));
  if (report.config.record_timing)
    report.runtime_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

Cohort validation_cohort(const StudyConfig& cfg, const ParameterSet& truth, const Standardization& reference,
                         std::size_t l) {
  Cohort v = generate_covariates(RngStream(cfg.seed, 3).substream(l), cfg.n_valid, cfg.covariates, reference);
  return simulate_responses(RngStream(cfg.seed, 4).substream(l), std::move(v), truth);
}

PredictOptions replicate_predict(const StudyConfig& cfg, std::size_t l) {
  PredictOptions p = cfg.predict;
  p.seed = mix_keys(cfg.predict.seed, l);
  if (resolve_workers(cfg.workers) > 1) p.workers = 1;
  return p;
}

}  // namespace

double coverage_rate(const std::vector<std::pair<double, double>>& intervals, double truth) {
  if (intervals.empty()) throw DataError("coverage_rate: no intervals");
  std::size_t hit = 0;
  for (const auto& [lo, hi] : intervals)
    if (lo <= truth && truth <= hi) ++hit;
  return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

void aggregate_bias_coverage(StudyReport& report) {
  report.aggregates.clear();
  report.bias_differences.clear();
  std::vector<Regime> regimes;
  for (const auto& t : report.truth)
    if (std::find(regimes.begin(), regimes.end(), t.regime) == regimes.end()) regimes.push_back(t.regime);
  for (Regime regime : regimes) {
    for (ModelKind model : {ModelKind::spm, ModelKind::naive}) {
      for (const auto& name : scalar_parameter_names(model)) {
        std::optional<double> truth;
        for (const auto& t : report.truth)
          if (t.regime == regime && t.parameter == name) truth = t.value;
        AggregateRow row;
        row.regime = regime;
        row.model = model;
        row.parameter = name;
        row.truth = truth;
        std::vector<std::pair<double, double>> intervals;
        double sum = 0.0;
        for (const auto& r : report.records) {
          if (r.failed || r.regime != regime || r.model != model) continue;
          const auto* p = r.find(name);
          if (!p) continue;
          sum += p->mean;
          intervals.emplace_back(p->lower, p->upper);
        }
        if (intervals.empty()) continue;
        row.count = intervals.size();
        row.mean = sum / static_cast<double>(row.count);
        if (truth) {
          row.bias = row.mean - *truth;
          row.coverage = coverage_rate(intervals, *truth);
        }
        report.aggregates.push_back(row);
      }
    }
    for (const auto& name : scalar_parameter_names(ModelKind::naive)) {
      const auto* s = report.aggregate(regime, ModelKind::spm, name);
      const auto* n = report.aggregate(regime, ModelKind::naive, name);
      if (!s || !n || !s->bias || !n->bias) continue;
      report.bias_differences.push_back(
          {regime, name, *s->bias - *n->bias, std::abs(*n->bias) - std::abs(*s->bias)});
    }
  }
}

StudyReport run_bias_coverage(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  StudyReport report;
  report.kind = StudyKind::bias_coverage;
  report.config = cfg;

  const Cohort covariates = generate_covariates(RngStream(cfg.seed, 1), cfg.n_train, cfg.covariates);
  const AgeGrid grid = fitting_age_grid(covariates.standardization, cfg.mcmc.age_knots);
  report.truth = truth_entries(regime_truth(cfg, cfg.regime, grid), cfg.regime);
  const ParameterSet sim_truth = cfg.regime == Regime::mar ? mar_theta(cfg.theta) : cfg.theta;

  const ModelKind models[2] = {ModelKind::spm, ModelKind::naive};
  std::vector<ReplicateRecord> slots(cfg.replicates * 2);
  parallel_for(cfg.replicates, cfg.workers, [&](std::size_t l) {
    Cohort data;
    std::string data_error;
    try {
      data = simulate_responses(RngStream(cfg.seed, 2).substream(l), covariates, sim_truth);
    } catch (const std::exception& e) {
      data_error = e.what();
    }
    for (std::size_t k = 0; k < 2; ++k) {
      ReplicateRecord& r = slots[2 * l + k];
      r.replicate = l;
      r.regime = cfg.regime;
      r.model = models[k];
      if (!data_error.empty()) {
        r.failed = true;
        r.error = data_error;
        continue;
      }
      guarded(r, [&] { fill_from_fit(r, fit(data, models[k], cfg.priors, replicate_mcmc(cfg, l))); });
    }
  });
  report.records = std::move(slots);
  aggregate_bias_coverage(report);
  finish(report, start);
  return report;
}

StudyReport run_prediction_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  StudyReport report;
  report.kind = StudyKind::prediction;
  report.config = cfg;

  const ParameterSet sim_truth = cfg.regime == Regime::mar ? mar_theta(cfg.theta) : cfg.theta;
  const Cohort train = generate_cohort(cfg.seed, cfg.n_train, sim_truth, cfg.covariates);
  McmcConfig mcmc = cfg.mcmc;
  const FitResult fits[2] = {fit(train, ModelKind::spm, cfg.priors, mcmc), fit(train, ModelKind::naive, cfg.priors, mcmc)};
  report.truth = truth_entries(regime_truth(cfg, cfg.regime, fits[0].grid), cfg.regime);

  std::vector<ReplicateRecord> slots(cfg.replicates * 2);
  parallel_for(cfg.replicates, cfg.workers, [&](std::size_t l) {
    Cohort valid;
    std::string data_error;
    try {
      valid = validation_cohort(cfg, sim_truth, train.standardization, l);
    } catch (const std::exception& e) {
      data_error = e.what();
    }
    for (std::size_t k = 0; k < 2; ++k) {
      ReplicateRecord& r = slots[2 * l + k];
      r.replicate = l;
      r.regime = cfg.regime;
      r.model = fits[k].model_kind;
      if (!data_error.empty()) {
        r.failed = true;
        r.error = data_error;
        continue;
      }
      guarded(r, [&] { r.scores = score_streaming(fits[k], valid, replicate_predict(cfg, l)); });
    }
  });
  report.records = std::move(slots);
  finish(report, start);
  return report;
}

StudyReport run_mnar_check(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  StudyReport report;
  report.kind = StudyKind::mnar_check;
  report.config = cfg;

  for (Regime regime : {Regime::mnar, Regime::mar}) {
    const ParameterSet sim_truth = regime == Regime::mar ? mar_theta(cfg.theta) : cfg.theta;
    const Cohort train = generate_cohort(cfg.seed, cfg.n_train, sim_truth, cfg.covariates);
    const FitResult f = fit(train, ModelKind::spm, cfg.priors, cfg.mcmc);
    for (auto& t : truth_entries(regime_truth(cfg, regime, f.grid), regime)) report.truth.push_back(t);

    std::vector<ReplicateRecord> slots(cfg.replicates);
    parallel_for(cfg.replicates, cfg.workers, [&](std::size_t l) {
      ReplicateRecord& r = slots[l];
      r.replicate = l;
      r.regime = regime;
      r.model = ModelKind::spm;
      guarded(r, [&] {
        const Cohort valid = validation_cohort(cfg, sim_truth, train.standardization, l);
        r.mae = mae_comparison(f, valid, replicate_predict(cfg, l));
      });
    });
    for (auto& r : slots) report.records.push_back(std::move(r));
  }
  finish(report, start);
  return report;
}

StudyReport run_prior_sensitivity(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  StudyReport report;
  report.kind = StudyKind::prior_sensitivity;
  report.config = cfg;

  const ParameterSet sim_truth = cfg.regime == Regime::mar ? mar_theta(cfg.theta) : cfg.theta;
  const Cohort train = generate_cohort(cfg.seed, cfg.n_train, sim_truth, cfg.covariates);
  report.truth = truth_entries(regime_truth(cfg, cfg.regime, fitting_age_grid(train.standardization, cfg.mcmc.age_knots)),
                               cfg.regime);

  std::vector<ReplicateRecord> slots(cfg.prior_variants.size());
  McmcConfig mcmc = cfg.mcmc;
  if (resolve_workers(cfg.workers) > 1) mcmc.workers = 1;
  parallel_for(slots.size(), cfg.workers, [&](std::size_t v) {
    ReplicateRecord& r = slots[v];
    r.replicate = 0;
    r.regime = cfg.regime;
    r.model = ModelKind::spm;
    r.variant = cfg.prior_variants[v].label;
    guarded(r, [&] {
      PriorSpec pr = cfg.priors;
      pr.c_mean = cfg.prior_variants[v].c_mean;
      pr.c_sd = cfg.prior_variants[v].c_sd;
      const FitResult f = fit(train, ModelKind::spm, pr, mcmc);
      fill_from_fit(r, f);
      r.age_curve = age_effect_curve(f);
    });
  });
  report.records = std::move(slots);
  finish(report, start);
  return report;
}

StudyReport run_study(const StudyConfig& cfg) {
  switch (cfg.kind) {
    case StudyKind::bias_coverage: return run_bias_coverage(cfg);
    case StudyKind::prediction: return run_prediction_study(cfg);
    case StudyKind::mnar_check: return run_mnar_check(cfg);
    case StudyKind::prior_sensitivity: return run_prior_sensitivity(cfg);
  }
  throw ParameterError("unknown study kind");
}

std::vector<ScoreDifference> score_differences(const StudyReport& report) {
  std::vector<ScoreDifference> out;
  for (const auto& s : report.records) {
    if (s.model != ModelKind::spm || s.failed || !s.scores) continue;
    for (const auto& n : report.records) {
      if (n.model != ModelKind::naive || n.failed || !n.scores || n.replicate != s.replicate || n.regime != s.regime)
        continue;
      const auto& a = *s.scores;
      const auto& b = *n.scores;
      ScoreDifference d;
      d.replicate = s.replicate;
      d.crps_present = a.crps_present - b.crps_present;
      if (a.crps_missing && b.crps_missing) d.crps_missing = *a.crps_missing - *b.crps_missing;
      if (a.crps_all && b.crps_all) d.crps_all = *a.crps_all - *b.crps_all;
      d.brier_all = a.brier_all - b.brier_all;
      if (a.brier_present && b.brier_present) d.brier_present = *a.brier_present - *b.brier_present;
      if (a.brier_missing && b.brier_missing) d.brier_missing = *a.brier_missing - *b.brier_missing;
      out.push_back(d);
      break;
    }
  }
  return out;
}

std::vector<double> mae_differences(const StudyReport& report, Regime regime) {
  std::vector<double> out;
  for (const auto& r : report.records)
    if (r.regime == regime && !r.failed && r.mae) out.push_back(r.mae->difference);
  return out;
}

MnarCheckSummary summarize_mnar_check(const StudyReport& report) {
  const auto mnar = mae_differences(report, Regime::mnar);
  const auto mar = mae_differences(report, Regime::mar);
  MnarCheckSummary s;
  if (mnar.empty() || mar.empty()) return s;
  s.mnar_all_negative = std::all_of(mnar.begin(), mnar.end(), [](double d) { return d < 0.0; });
  const auto [mar_lo, mar_hi] = std::minmax_element(mar.begin(), mar.end());
  s.mar_covers_zero = *mar_lo <= 0.0 && 0.0 <= *mar_hi;
  const auto [mnar_lo, mnar_hi] = std::minmax_element(mnar.begin(), mnar.end());
  s.disjoint = *mnar_hi < *mar_lo || *mar_hi < *mnar_lo;
  return s;
}

PriorSensitivitySummary summarize_prior_sensitivity(const StudyReport& report) {
  std::vector<const ReplicateRecord*> ok;
  for (const auto& r : report.records)
    if (!r.failed && r.age_curve) ok.push_back(&r);
  PriorSensitivitySummary s;
  if (ok.empty()) return s;
  s.intervals_overlap = true;
  for (std::size_t a = 0; a < ok.size(); ++a) {
    for (std::size_t b = a + 1; b < ok.size(); ++b) {
      for (const auto& name : coefficient_names()) {
        const auto* pa = ok[a]->find(name);
        const auto* pb = ok[b]->find(name);
        if (!pa || !pb) continue;
        if (pa->lower > pb->upper || pb->lower > pa->upper) {
          if (s.intervals_overlap) s.worst_pair = ok[a]->variant + " vs " + ok[b]->variant + " (" + name + ")";
          s.intervals_overlap = false;
        }
      }
      const auto& ca = ok[a]->age_curve->mean;
      const auto& cb = ok[b]->age_curve->mean;
      for (std::size_t k = 0; k < std::min(ca.size(), cb.size()); ++k)
        s.max_curve_gap = std::max(s.max_curve_gap, std::abs(ca[k] - cb[k]));
    }
  }
  const std::size_t k = ok.front()->age_curve->mean.size();
  std::vector<double> avg(k, 0.0);
  for (const auto* r : ok)
    for (std::size_t j = 0; j < k; ++j) avg[j] += r->age_curve->mean[j] / static_cast<double>(ok.size());
  const auto [lo, hi] = std::minmax_element(avg.begin(), avg.end());
  s.curve_range = *hi - *lo;
  return s;
}

}  // namespace spm
