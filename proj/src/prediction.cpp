#include "spm/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "spm/errors.hpp"
#include "spm/parallel.hpp"

namespace spm {

std::string to_string(Conditioning c) {
  switch (c) {
    case Conditioning::unconditional: return "unconditional";
    case Conditioning::present: return "m0";
    case Conditioning::missing: return "m1";
  }
  return "unconditional";
}

Conditioning parse_conditioning(const std::string& text) {
  if (text == "unconditional" || text == "none") return Conditioning::unconditional;
  if (text == "m0" || text == "0" || text == "present") return Conditioning::present;
  if (text == "m1" || text == "1" || text == "missing") return Conditioning::missing;
  throw ParameterError("unknown conditioning '" + text + "'");
}

void PredictOptions::validate() const {
  if (samples < 1) throw ParameterError("predict: at least one sample is required");
  if (grid_nodes < 3) throw ParameterError("predict: at least 3 grid nodes are required");
  if (!(grid_halfwidth > 0.0)) throw ParameterError("predict: grid half-width must be positive");
}

namespace {

void check_standardization(const FitResult& fit, const Cohort& cohort) {
  const auto& a = fit.standardization.age;
  const auto& b = cohort.standardization.age;
  const double tol = 1e-6;
  if (std::abs(a.mean - b.mean) > tol * std::max(1.0, std::abs(a.mean)) ||
      std::abs(a.sd - b.sd) > tol * std::max(1.0, a.sd))
    throw DataError("cohort age standardization differs from the training constants");
}

}  // namespace

Predictor::Predictor(const FitResult& fit, const PredictOptions& options) : fit_(fit), opt_(options) {
  opt_.validate();
  if (fit.draw_count() == 0) throw DataError("fit has no retained draws");
  const auto col = [&](const char* n) { return static_cast<Eigen::Index>(fit.column(n)); };
  const Eigen::Index ia[5] = {col("alpha_0"), col("alpha_bp"), col("alpha_age"), col("alpha_bmi"), col("alpha_sex")};
  const Eigen::Index ib[4] = {col("beta_0"), col("beta_bp"), col("beta_bmi"), col("beta_sex")};
  const bool has_c = fit.has("c");
  const Eigen::Index ic = has_c ? col("c") : 0;
  const Eigen::Index is = col("sigma_eps");
  f_offset_ = fit.f_offset();
  c_degenerate_ = true;
  draws_.resize(fit.draw_count());
  for (std::size_t r = 0; r < draws_.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    Draw& d = draws_[r];
    for (int j = 0; j < 5; ++j) d.alpha[j] = fit.draws(row, ia[j]);
    for (int j = 0; j < 4; ++j) d.beta[j] = fit.draws(row, ib[j]);
    d.c = has_c ? fit.draws(row, ic) : 0.0;
    d.sigma = fit.draws(row, is);
    d.row = r;
    if (d.c != 0.0) c_degenerate_ = false;
  }
  const std::size_t k = opt_.grid_nodes;
  for (std::size_t j = 0; j < k; ++j) {
    const double x = -opt_.grid_halfwidth + 2.0 * opt_.grid_halfwidth * static_cast<double>(j) / static_cast<double>(k - 1);
    unit_nodes_.push_back(x);
    unit_density_.push_back(std::exp(-0.5 * x * x));
  }
}

double Predictor::f_at(std::size_t row, const AgeGrid::Bracket& b) const {
  const auto r = static_cast<Eigen::Index>(row);
  const auto j = static_cast<Eigen::Index>(f_offset_ + b.lower);
  return (1.0 - b.weight) * fit_.draws(r, j) + b.weight * fit_.draws(r, j + 1);
}

const Predictor::Draw& Predictor::draw_for_sample(std::size_t s) const {
  return draws_[s * draws_.size() / opt_.samples];
}

double Predictor::conditional_eps_mean(double b, double c, double sigma, int m) const {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < unit_nodes_.size(); ++j) {
    const double eta = b + c * sigma * unit_nodes_[j];
    const double w = unit_density_[j] * (m == 1 ? logistic(eta) : logistic(-eta));
    num += w * unit_nodes_[j];
    den += w;
  }
  if (!(den > 0.0)) throw NumericalError("conditional eps weights vanish");
  return sigma * num / den;
}

void Predictor::sample(const Participant& x, Conditioning cond, RngStream rng, std::vector<double>& bp_f,
                       std::vector<double>& p) const {
  const std::size_t S = opt_.samples;
  bp_f.resize(S);
  p.resize(S);
  if (c_degenerate_) cond = Conditioning::unconditional;
  const auto bracket = fit_.grid.locate(x.age_std);
  const double sex = static_cast<double>(x.sex);
  const std::size_t k = unit_nodes_.size();
  const double h = unit_nodes_[1] - unit_nodes_[0];
  std::vector<double> cum(k);
  for (std::size_t s = 0; s < S; ++s) {
    const Draw& d = draw_for_sample(s);
    const double ebp = d.alpha[0] + d.alpha[1] * x.bp_i_std + d.alpha[2] * x.age_std + d.alpha[3] * x.bmi_std +
                       d.alpha[4] * sex;
    const double em =
        d.beta[0] + d.beta[1] * x.bp_i_std + d.beta[2] * x.bmi_std + d.beta[3] * sex + f_at(d.row, bracket);
    const double u = rng.uniform();
    double eps;
    if (cond == Conditioning::unconditional) {
      eps = d.sigma * normal_quantile(u);
    } else {
      // Piecewise-constant density on cells centred at the nodes; u picks the
      // cell and its leftover fraction the position inside it.
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double eta = em + d.c * d.sigma * unit_nodes_[j];
        total += unit_density_[j] * (cond == Conditioning::missing ? logistic(eta) : logistic(-eta));
        cum[j] = total;
      }
      const double target = u * total;
      const std::size_t j = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
      const std::size_t jj = std::min(j, k - 1);
      const double lo = jj == 0 ? 0.0 : cum[jj - 1];
      const double width = cum[jj] - lo;
      const double v = width > 0.0 ? std::clamp((target - lo) / width, 0.0, 1.0) : 0.5;
      eps = d.sigma * (unit_nodes_[jj] + h * (v - 0.5));
    }
    bp_f[s] = ebp + eps;
    p[s] = logistic(em + d.c * eps);
  }
}

double Predictor::mean_bp_f(const Participant& x, Conditioning cond) const {
  if (c_degenerate_) cond = Conditioning::unconditional;
  const auto bracket = fit_.grid.locate(x.age_std);
  const double sex = static_cast<double>(x.sex);
  double acc = 0.0;
  for (const Draw& d : draws_) {
    double v = d.alpha[0] + d.alpha[1] * x.bp_i_std + d.alpha[2] * x.age_std + d.alpha[3] * x.bmi_std + d.alpha[4] * sex;
    if (cond != Conditioning::unconditional) {
      const double em =
          d.beta[0] + d.beta[1] * x.bp_i_std + d.beta[2] * x.bmi_std + d.beta[3] * sex + f_at(d.row, bracket);
      v += conditional_eps_mean(em, d.c, d.sigma, cond == Conditioning::missing ? 1 : 0);
    }
    acc += v;
  }
  return acc / static_cast<double>(draws_.size());
}

double Predictor::mean_dropout_probability(const Participant& x) const {
  const auto bracket = fit_.grid.locate(x.age_std);
  const double sex = static_cast<double>(x.sex);
  double den = 0.0;
  for (double w : unit_density_) den += w;
  double acc = 0.0;
  for (const Draw& d : draws_) {
    const double em =
        d.beta[0] + d.beta[1] * x.bp_i_std + d.beta[2] * x.bmi_std + d.beta[3] * sex + f_at(d.row, bracket);
    double num = 0.0;
    for (std::size_t j = 0; j < unit_nodes_.size(); ++j)
      num += unit_density_[j] * logistic(em + d.c * d.sigma * unit_nodes_[j]);
    acc += num / den;
  }
  return acc / static_cast<double>(draws_.size());
}

PredictiveDistribution predict(const FitResult& fit, const Cohort& cohort, Conditioning cond,
                               const PredictOptions& options) {
  check_standardization(fit, cohort);
  Predictor predictor(fit, options);
  PredictiveDistribution out;
  out.condition = cond;
  if (cond != Conditioning::unconditional && predictor.c_degenerate()) {
    out.condition = Conditioning::unconditional;
    out.notes.push_back("every c draw is zero; conditioning has no effect and predictions are unconditional");
  }
  const std::size_t n = cohort.size();
  const auto S = static_cast<Eigen::Index>(options.samples);
  out.bp_f.resize(static_cast<Eigen::Index>(n), S);
  out.p.resize(static_cast<Eigen::Index>(n), S);
  out.ids.resize(n);
  const RngStream root(options.seed, 0);
  parallel_for(n, options.workers, [&](std::size_t i) {
    std::vector<double> b, p;
    predictor.sample(cohort.participants[i], cond, root.substream(i), b, p);
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index s = 0; s < S; ++s) {
      out.bp_f(r, s) = b[static_cast<std::size_t>(s)];
      out.p(r, s) = p[static_cast<std::size_t>(s)];
    }
    out.ids[i] = cohort.participants[i].id;
  });
  return out;
}

double crps_gaussian(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw ParameterError("crps_gaussian: sigma must be positive");
  const double z = (y - mu) / sigma;
  return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / std::sqrt(std::numbers::pi));
}

double crps_empirical(std::span<const double> sample, double y) {
  if (sample.empty()) throw ParameterError("crps_empirical: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double abs_dev = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_dev += std::abs(x[i] - y);
    spread += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  }
  return std::max(0.0, abs_dev / n - spread / (n * n));
}

double brier(std::span<const double> p_mean, std::span<const int> m) {
  if (p_mean.size() != m.size()) throw ParameterError("brier: length mismatch");
  if (p_mean.empty()) throw ParameterError("brier: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = p_mean[i] - static_cast<double>(m[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(m.size());
}

namespace {

struct ParticipantScore {
  double crps = 0.0;
  bool has_outcome = false;
  double p_mean = 0.0;
  double abs_error = 0.0;
};

ParticipantScore score_one(std::span<const double> bp, std::span<const double> p, const Participant& x) {
  ParticipantScore s;
  s.p_mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
  if (const auto y = x.outcome_for_scoring()) {
    s.has_outcome = true;
    s.crps = crps_empirical(bp, *y);
    s.abs_error = std::abs(std::accumulate(bp.begin(), bp.end(), 0.0) / static_cast<double>(bp.size()) - *y);
  }
  return s;
}

ScoreReport aggregate(const std::vector<ParticipantScore>& scores, const Cohort& cohort) {
  ScoreReport r;
  double crps_p = 0.0, crps_m = 0.0, br_p = 0.0, br_m = 0.0, mae_p = 0.0, mae_m = 0.0;
  std::size_t scored_missing = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& x = cohort.participants[i];
    const auto& s = scores[i];
    const double bd = s.p_mean - static_cast<double>(x.m);
    if (x.missing()) {
      ++r.n_missing;
      br_m += bd * bd;
      if (s.has_outcome) {
        ++scored_missing;
        crps_m += s.crps;
        mae_m += s.abs_error;
      }
    } else {
      ++r.n_present;
      br_p += bd * bd;
      crps_p += s.crps;
      mae_p += s.abs_error;
    }
  }
  if (r.n_present == 0) throw DataError("no present participants to score");
  const double np = static_cast<double>(r.n_present);
  const double nm = static_cast<double>(r.n_missing);
  r.crps_present = crps_p / np;
  r.mae_present = mae_p / np;
  r.brier_present = br_p / np;
  r.brier_all = (br_p + br_m) / (np + nm);
  if (r.n_missing > 0) r.brier_missing = br_m / nm;
  if (r.n_missing > 0 && scored_missing == r.n_missing) {
    r.crps_missing = crps_m / nm;
    r.crps_all = (crps_p + crps_m) / (np + nm);
    r.mae_all = (mae_p + mae_m) / (np + nm);
  } else if (r.n_missing == 0) {
    r.crps_all = r.crps_present;
    r.mae_all = r.mae_present;
  }
  return r;
}

}  // namespace

ScoreReport score(const PredictiveDistribution& pred, const Cohort& cohort) {
  if (pred.size() != cohort.size()) throw DataError("prediction and cohort differ in size");
  std::vector<ParticipantScore> scores(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (pred.ids[i] != cohort.participants[i].id)
      throw DataError("prediction and cohort disagree on participant id at row " + std::to_string(i + 1));
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd b = pred.bp_f.row(r).transpose();
    const Eigen::VectorXd p = pred.p.row(r).transpose();
    scores[i] = score_one(std::span(b.data(), static_cast<std::size_t>(b.size())),
                          std::span(p.data(), static_cast<std::size_t>(p.size())), cohort.participants[i]);
  }
  return aggregate(scores, cohort);
}

ScoreReport score_streaming(const FitResult& fit, const Cohort& cohort, const PredictOptions& options) {
  check_standardization(fit, cohort);
  Predictor predictor(fit, options);
  std::vector<ParticipantScore> scores(cohort.size());
  const RngStream root(options.seed, 0);
  parallel_for(cohort.size(), options.workers, [&](std::size_t i) {
    std::vector<double> b, p;
    predictor.sample(cohort.participants[i], Conditioning::unconditional, root.substream(i), b, p);
    scores[i] = score_one(b, p, cohort.participants[i]);
  });
  return aggregate(scores, cohort);
}

MaeComparison mae_comparison(const FitResult& fit, const Cohort& cohort, const PredictOptions& options) {
  check_standardization(fit, cohort);
  Predictor predictor(fit, options);
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    if (!cohort.participants[i].missing()) present.push_back(i);
  if (present.empty()) throw DataError("mae_comparison: no present participants");
  std::vector<double> cond(present.size()), uncond(present.size());
  parallel_for(present.size(), options.workers, [&](std::size_t j) {
    const auto& x = cohort.participants[present[j]];
    const double y = *x.bp_f_std;
    cond[j] = std::abs(predictor.mean_bp_f(x, Conditioning::present) - y);
    uncond[j] = std::abs(predictor.mean_bp_f(x, Conditioning::unconditional) - y);
  });
  MaeComparison r;
  r.evaluated = present.size();
  r.fell_back = predictor.c_degenerate();
  for (std::size_t j = 0; j < present.size(); ++j) {
    r.conditional += cond[j];
    r.unconditional += uncond[j];
  }
  r.conditional /= static_cast<double>(present.size());
  r.unconditional /= static_cast<double>(present.size());
  r.difference = r.conditional - r.unconditional;
  return r;
}

}  // namespace spm
