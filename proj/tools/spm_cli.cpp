// spm: generate cohorts, fit models, predict, score, run studies and emit
// reports. Exit codes: 0 ok, 1 usage, 2 data/schema, 3 numerical.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spm/errors.hpp"
#include "spm/inference.hpp"
#include "spm/io.hpp"
#include "spm/prediction.hpp"
#include "spm/report.hpp"
#include "spm/study.hpp"
#include "spm/synth.hpp"

namespace fs = std::filesystem;
using namespace spm;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

int fail(int code, const char* type, const std::string& what) {
  std::cerr << "spm: error code=" << code << " type=" << type << " message=\"" << one_line(what) << "\"\n";
  return code;
}

fs::path or_default(const std::string& given, const char* name) {
  return given.empty() ? io::default_output_dir() / name : fs::path(given);
}

std::optional<Standardization> load_std(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return io::standardization_from_json(io::load_json(path));
}

void note(const std::string& s) { std::cerr << "spm: note: " << one_line(s) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared parameter model for blood pressure with informative dropout"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Simulate a synthetic cohort");
  std::size_t gen_n = 1000;
  std::uint64_t gen_seed = kDefaultSeed;
  std::string gen_theta, gen_out, gen_std_in, gen_std_out, gen_preset;
  bool gen_mar = false, gen_no_oracle = false;
  gen->add_option("--n", gen_n, "Number of participants")->check(CLI::PositiveNumber);
  gen->add_option("--preset", gen_preset, "Documented cohort size: small (1000) or full (64385)")
      ->check(CLI::IsMember({"small", "full"}));
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--theta", gen_theta, "Parameter set JSON (default: built-in truth)");
  gen->add_flag("--mar", gen_mar, "Set c = 0 (missing at random)");
  gen->add_option("--std-in", gen_std_in, "Standardize age with these constants (JSON)");
  gen->add_option("--std-out", gen_std_out, "Write the standardization constants (JSON)");
  gen->add_flag("--no-oracle", gen_no_oracle, "Omit the oracle outcome column");
  gen->add_option("--out", gen_out, "Output CSV");

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit the SPM or the naive model by MCMC");
  std::string fit_model = "spm", fit_data, fit_std, fit_priors, fit_out;
  McmcConfig fit_cfg;
  fitc->add_option("--model", fit_model, "spm or naive")->check(CLI::IsMember({"spm", "naive"}));
  fitc->add_option("--data", fit_data, "Cohort CSV")->required();
  fitc->add_option("--std", fit_std, "Standardization JSON for the cohort");
  fitc->add_option("--priors", fit_priors, "Prior JSON");
  fitc->add_option("--iters", fit_cfg.iterations, "Iterations per chain");
  fitc->add_option("--warmup", fit_cfg.warmup, "Warmup iterations per chain");
  fitc->add_option("--chains", fit_cfg.chains, "Number of chains");
  fitc->add_option("--thin", fit_cfg.thin, "Thinning interval");
  fitc->add_option("--knots", fit_cfg.age_knots, "Age grid knots");
  fitc->add_option("--seed", fit_cfg.seed, "Random seed");
  fitc->add_option("--workers", fit_cfg.workers, "Threads (0: all cores)");
  fitc->add_option("--out", fit_out, "Output fit JSON");

  // predict
  auto* pred = app.add_subcommand("predict", "Posterior predictive draws for a cohort");
  std::string pred_fit, pred_data, pred_std, pred_out;
  int pred_cond = -1;
  PredictOptions pred_opt;
  pred->add_option("--fit", pred_fit, "Fit JSON")->required();
  pred->add_option("--data", pred_data, "Cohort CSV")->required();
  pred->add_option("--std", pred_std, "Standardization JSON for the cohort");
  pred->add_option("--condition-missing", pred_cond, "Condition on m = 0 or m = 1")->check(CLI::Range(0, 1));
  pred->add_option("--samples", pred_opt.samples, "Samples per participant");
  pred->add_option("--seed", pred_opt.seed, "Random seed");
  pred->add_option("--workers", pred_opt.workers, "Threads (0: all cores)");
  pred->add_option("--out", pred_out, "Output prediction JSON");

  // score
  auto* sc = app.add_subcommand("score", "Score predictions against a cohort");
  std::string sc_pred, sc_data, sc_std, sc_out;
  sc->add_option("--pred", sc_pred, "Prediction JSON")->required();
  sc->add_option("--data", sc_data, "Cohort CSV")->required();
  sc->add_option("--std", sc_std, "Standardization JSON for the cohort");
  sc->add_option("--out", sc_out, "Output score JSON");

  // study
  auto* st = app.add_subcommand("study", "Run a simulation study");
  std::string st_kind, st_config, st_out;
  bool st_full = false;
  std::optional<std::size_t> st_reps, st_workers;
  st->add_option("kind", st_kind, "bias-coverage, prediction, mnar-check or prior-sensitivity")
      ->required()
      ->check(CLI::IsMember({"bias-coverage", "prediction", "mnar-check", "prior-sensitivity"}));
  st->add_option("--config", st_config, "Study config JSON (overrides the preset)");
  st->add_flag("--full-scale", st_full, "Start from the full-scale preset instead of desk scale");
  st->add_option("--replicates", st_reps, "Number of replicates");
  st->add_option("--workers", st_workers, "Concurrent replicates");
  st->add_option("--out-dir", st_out, "Output directory");

  // report
  auto* rep = app.add_subcommand("report", "Emit CSV tables and SVG figures");
  std::string rep_in, rep_out;
  rep->add_option("--in", rep_in, "Study or fit JSON")->required();
  rep->add_option("--out-dir", rep_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*gen) {
      if (gen_preset == "small") gen_n = 1000;
      if (gen_preset == "full") gen_n = 64385;
      ParameterSet theta = gen_theta.empty() ? paper_theta_true() : io::parameter_set_from_json(io::load_json(gen_theta));
      if (gen_mar) theta = mar_theta(theta);
      const CovariateGenConfig cov;
      Cohort c = generate_covariates(RngStream(gen_seed, 1), gen_n, cov, load_std(gen_std_in));
      c = simulate_responses(RngStream(gen_seed, 2), std::move(c), theta);
      io::save_cohort(or_default(gen_out, "cohort.csv"), c, !gen_no_oracle);
      if (!gen_std_out.empty()) io::save_json(gen_std_out, io::to_json(c.standardization));
    } else if (*fitc) {
      const Cohort c = io::load_cohort(fit_data, load_std(fit_std));
      const PriorSpec pr = fit_priors.empty() ? PriorSpec{} : io::prior_spec_from_json(io::load_json(fit_priors));
      const FitResult f = fit(c, parse_model_kind(fit_model), pr, fit_cfg);
      for (const auto& w : f.warnings) note(w);
      io::save_json(or_default(fit_out, "fit.json"), io::to_json(f));
    } else if (*pred) {
      const FitResult f = io::fit_from_json(io::load_json(pred_fit));
      if (f.draw_count() == 0) throw DataError("fit file has no draws");
      const Cohort c = io::load_cohort(pred_data, load_std(pred_std));
      const Conditioning cond = pred_cond < 0 ? Conditioning::unconditional
                                : pred_cond == 0 ? Conditioning::present
                                                 : Conditioning::missing;
      const auto p = predict(f, c, cond, pred_opt);
      for (const auto& n : p.notes) note(n);
      io::save_json(or_default(pred_out, "prediction.json"), io::to_json(p));
    } else if (*sc) {
      const auto p = io::prediction_from_json(io::load_json(sc_pred));
      const Cohort c = io::load_cohort(sc_data, load_std(sc_std));
      io::save_json(or_default(sc_out, "scores.json"), io::to_json(score(p, c)));
    } else if (*st) {
      const StudyKind kind = parse_study_kind(st_kind);
      StudyConfig cfg = st_full ? StudyConfig::full(kind) : StudyConfig::desk(kind);
      if (!st_config.empty()) cfg = io::study_config_from_json(io::load_json(st_config), cfg);
      cfg.kind = kind;
      if (st_reps) cfg.replicates = *st_reps;
      if (st_workers) cfg.workers = *st_workers;
      const StudyReport r = run_study(cfg);
      if (r.failed > 0) note(std::to_string(r.failed) + " replicate record(s) failed");
      const fs::path dir = st_out.empty() ? io::default_output_dir() : fs::path(st_out);
      io::save_json(dir / "study.json", io::to_json(r));
    } else if (*rep) {
      const auto j = io::load_json(rep_in);
      const fs::path dir = rep_out.empty() ? io::default_output_dir() : fs::path(rep_out);
      const std::string kind = j.value("kind", "");
      if (kind == "study")
        report::write_study_report(io::study_report_from_json(j), dir);
      else if (kind == "fit")
        report::write_fit_report(io::fit_from_json(j), dir);
      else
        throw DataError("report input must be a study or fit document");
    }
  } catch (const NumericalError& e) {
    return fail(kNumerical, "numerical", e.what());
  } catch (const DataError& e) {
    return fail(kData, "data", e.what());
  } catch (const ParameterError& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const DomainError& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const std::exception& e) {
    return fail(kData, "data", e.what());
  }
  return kOk;
}
