#include "spm/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "spm/io.hpp"
#include "spm/svg.hpp"

namespace spm::report {

namespace fs = std::filesystem;

namespace {

const char* const kSpmColor = "#1f77b4";
const char* const kNaiveColor = "#ff7f0e";
const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
                                "#7f7f7f", "#bcbd22", "#17becf"};

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string real(const std::optional<double>& v) { return v ? real(*v) : "NA"; }

struct Writer {
  fs::path dir;
  std::vector<fs::path> written;

  void text(const std::string& name, const std::string& body) {
    io::write_text(dir / name, body);
    written.push_back(dir / name);
  }
};

void fit_outputs(Writer& w, const FitResult& fit) {
  std::ostringstream csv;
  csv << "parameter,mean,sd,lower,upper,rhat,ess\n";
  for (const auto& s : fit.summary)
    csv << s.name << ',' << real(s.mean) << ',' << real(s.sd) << ',' << real(s.lower) << ',' << real(s.upper) << ','
        << real(s.rhat) << ',' << real(s.ess) << '\n';
  w.text("summary.csv", csv.str());

  if (fit.draw_count() > 0) {
    svg::Figure fig(4, 260, 200);
    std::ostringstream dens;
    dens << "parameter,draw,value\n";
    for (const auto& name : scalar_parameter_names(fit.model_kind)) {
      const auto col = fit.draws.col(static_cast<Eigen::Index>(fit.column(name)));
      std::vector<double> v(col.data(), col.data() + col.size());
      for (std::size_t i = 0; i < v.size(); ++i) dens << name << ',' << i << ',' << real(v[i]) << '\n';
      const auto& s = fit.summary_of(name);
      fig.add(name).histogram(v, kSpmColor).bins(30).vline(s.mean, "#000", false).vline(s.lower, "#666").vline(s.upper, "#666");
    }
    w.text("posterior_draws.csv", dens.str());
    w.text("posterior_density.svg", fig.str());

    const auto curve = age_effect_curve(fit);
    std::ostringstream ac;
    ac << "knot,age_std,age_years,mean,lower,upper\n";
    std::vector<double> years;
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
      years.push_back(fit.standardization.age.restore(curve.grid[k]));
      ac << k << ',' << real(curve.grid[k]) << ',' << real(years.back()) << ',' << real(curve.mean[k]) << ','
         << real(curve.lower[k]) << ',' << real(curve.upper[k]) << '\n';
    }
    w.text("age_effect.csv", ac.str());
    svg::Figure af(1, 520, 340);
    af.add("Age effect (" + to_string(fit.model_kind) + ")")
        .xlabel("age (years)")
        .ylabel("f(age)")
        .band(years, curve.lower, curve.upper, kSpmColor)
        .line(years, curve.mean, kSpmColor, to_string(fit.model_kind));
    w.text("age_effect.svg", af.str());
  }
}

void bias_coverage_outputs(Writer& w, const StudyReport& r) {
  std::ostringstream t;
  t << "regime,parameter,truth,spm_mean,spm_bias,spm_coverage,naive_mean,naive_bias,naive_coverage,"
       "difference_in_bias,abs_bias_reduction\n";
  std::vector<Regime> regimes;
  for (const auto& a : r.aggregates)
    if (std::find(regimes.begin(), regimes.end(), a.regime) == regimes.end()) regimes.push_back(a.regime);
  for (Regime g : regimes) {
    for (const auto& name : scalar_parameter_names(ModelKind::spm)) {
      const auto* s = r.aggregate(g, ModelKind::spm, name);
      const auto* n = r.aggregate(g, ModelKind::naive, name);
      if (!s && !n) continue;
      const auto* any = s ? s : n;
      t << to_string(g) << ',' << name << ',' << real(any->truth) << ',';
      if (s) t << real(s->mean) << ',' << real(s->bias) << ',' << real(s->coverage) << ',';
      else t << "NA,NA,NA,";
      if (n) t << real(n->mean) << ',' << real(n->bias) << ',' << real(n->coverage) << ',';
      else t << "NA,NA,NA,";
      const BiasDifferenceRow* d = nullptr;
      for (const auto& x : r.bias_differences)
        if (x.regime == g && x.parameter == name) d = &x;
      if (d) t << real(d->difference) << ',' << real(d->abs_reduction) << '\n';
      else t << "NA,NA\n";
    }
  }
  w.text("bias_coverage.csv", t.str());

  std::ostringstream rep;
  rep << "replicate,regime,model,parameter,mean,lower,upper,rhat,ess,failed\n";
  for (const auto& rec : r.records) {
    if (rec.failed) {
      rep << rec.replicate << ',' << to_string(rec.regime) << ',' << to_string(rec.model) << ",NA,NA,NA,NA,NA,NA,1\n";
      continue;
    }
    for (const auto& p : rec.parameters)
      rep << rec.replicate << ',' << to_string(rec.regime) << ',' << to_string(rec.model) << ',' << p.name << ','
          << real(p.mean) << ',' << real(p.lower) << ',' << real(p.upper) << ',' << real(p.rhat) << ',' << real(p.ess)
          << ",0\n";
  }
  w.text("replicates.csv", rep.str());

  svg::Figure fig(4, 260, 200);
  for (const auto& name : scalar_parameter_names(ModelKind::spm)) {
    auto& plot = fig.add(name).bins(15);
    for (ModelKind m : {ModelKind::spm, ModelKind::naive}) {
      std::vector<double> means;
      for (const auto& rec : r.records)
        if (!rec.failed && rec.model == m)
          if (const auto* p = rec.find(name)) means.push_back(p->mean);
      if (!means.empty()) plot.histogram(means, m == ModelKind::spm ? kSpmColor : kNaiveColor, to_string(m));
    }
    for (const auto& tr : r.truth)
      if (tr.parameter == name && tr.value) plot.vline(*tr.value, "#000", false);
  }
  w.text("posterior_means.svg", fig.str());
}

void prediction_outputs(Writer& w, const StudyReport& r) {
  std::ostringstream s;
  s << "replicate,model,crps_all,crps_present,crps_missing,brier_all,brier_present,brier_missing,mae_present\n";
  for (const auto& rec : r.records) {
    if (rec.failed || !rec.scores) continue;
    const auto& x = *rec.scores;
    s << rec.replicate << ',' << to_string(rec.model) << ',' << real(x.crps_all) << ',' << real(x.crps_present) << ','
      << real(x.crps_missing) << ',' << real(x.brier_all) << ',' << real(x.brier_present) << ','
      << real(x.brier_missing) << ',' << real(x.mae_present) << '\n';
  }
  w.text("scores.csv", s.str());

  const auto diffs = score_differences(r);
  std::ostringstream d;
  d << "replicate,crps_all,crps_present,crps_missing,brier_all,brier_present,brier_missing\n";
  std::vector<double> c[3], b[3];
  for (const auto& x : diffs) {
    d << x.replicate << ',' << real(x.crps_all) << ',' << real(x.crps_present) << ',' << real(x.crps_missing) << ','
      << real(x.brier_all) << ',' << real(x.brier_present) << ',' << real(x.brier_missing) << '\n';
    c[0].push_back(x.crps_all);
    c[1].push_back(x.crps_present);
    c[2].push_back(x.crps_missing);
    b[0].push_back(x.brier_all);
    b[1].push_back(x.brier_present);
    b[2].push_back(x.brier_missing);
  }
  w.text("score_differences.csv", d.str());
  const char* groups[3] = {"all", "present", "missing"};
  svg::Figure fc(3, 300, 230), fb(3, 300, 230);
  for (int g = 0; g < 3; ++g) {
    fc.add(std::string("CRPS SPM - naive, ") + groups[g]).histogram(c[g], kSpmColor).bins(12).vline(0.0, "#000");
    fb.add(std::string("Brier SPM - naive, ") + groups[g]).histogram(b[g], kSpmColor).bins(12).vline(0.0, "#000");
  }
  w.text("diff_crps.svg", fc.str());
  w.text("diff_brier.svg", fb.str());
}

void mnar_outputs(Writer& w, const StudyReport& r) {
  std::ostringstream m;
  m << "regime,replicate,mae_conditional,mae_unconditional,difference\n";
  for (const auto& rec : r.records)
    if (!rec.failed && rec.mae)
      m << to_string(rec.regime) << ',' << rec.replicate << ',' << real(rec.mae->conditional) << ','
        << real(rec.mae->unconditional) << ',' << real(rec.mae->difference) << '\n';
  w.text("mae_differences.csv", m.str());
  svg::Figure f(1, 520, 340);
  f.add("MAE(conditional) - MAE(unconditional)")
      .xlabel("difference")
      .ylabel("replicates")
      .bins(20)
      .histogram(mae_differences(r, Regime::mnar), kSpmColor, "MNAR")
      .histogram(mae_differences(r, Regime::mar), kNaiveColor, "MAR")
      .vline(0.0, "#000");
  w.text("validation_mnar_diff.svg", f.str());
}

void prior_outputs(Writer& w, const StudyReport& r) {
  std::ostringstream p;
  p << "variant,parameter,mean,lower,upper,rhat,ess\n";
  std::ostringstream c;
  c << "variant,knot,age_std,mean,lower,upper\n";
  svg::Figure fig(1, 560, 360);
  auto& plot = fig.add("Posterior-mean age effect by prior for c").xlabel("standardized age").ylabel("f(age)");
  std::size_t color = 0;
  for (const auto& rec : r.records) {
    if (rec.failed) continue;
    for (const auto& s : rec.parameters)
      p << rec.variant << ',' << s.name << ',' << real(s.mean) << ',' << real(s.lower) << ',' << real(s.upper) << ','
        << real(s.rhat) << ',' << real(s.ess) << '\n';
    if (rec.age_curve) {
      const auto& a = *rec.age_curve;
      for (std::size_t k = 0; k < a.grid.size(); ++k)
        c << rec.variant << ',' << k << ',' << real(a.grid[k]) << ',' << real(a.mean[k]) << ',' << real(a.lower[k])
          << ',' << real(a.upper[k]) << '\n';
      plot.line(a.grid, a.mean, kPalette[color++ % std::size(kPalette)], rec.variant);
    }
  }
  w.text("prior_sensitivity.csv", p.str());
  w.text("age_curves.csv", c.str());
  w.text("age_effect.svg", fig.str());
  const auto s = summarize_prior_sensitivity(r);
  std::ostringstream sum;
  sum << "intervals_overlap,max_curve_gap,curve_range\n"
      << (s.intervals_overlap ? 1 : 0) << ',' << real(s.max_curve_gap) << ',' << real(s.curve_range) << '\n';
  w.text("prior_sensitivity_summary.csv", sum.str());
}

}  // namespace

std::vector<fs::path> write_fit_report(const FitResult& fit, const fs::path& dir) {
  Writer w{dir, {}};
  fit_outputs(w, fit);
  return w.written;
}

std::vector<fs::path> write_study_report(const StudyReport& report, const fs::path& dir) {
  Writer w{dir, {}};
  switch (report.kind) {
    case StudyKind::bias_coverage: bias_coverage_outputs(w, report); break;
    case StudyKind::prediction: prediction_outputs(w, report); break;
    case StudyKind::mnar_check: mnar_outputs(w, report); break;
    case StudyKind::prior_sensitivity: prior_outputs(w, report); break;
  }
  return w.written;
}

}  // namespace spm::report
