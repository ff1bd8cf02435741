#include "spm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "spm/errors.hpp"
#include "spm/random.hpp"

namespace spm {

std::string to_string(ModelKind kind) { return kind == ModelKind::spm ? "spm" : "naive"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "spm" || text == "SPM") return ModelKind::spm;
  if (text == "naive") return ModelKind::naive;
  throw ParameterError("unknown model kind '" + text + "' (expected spm or naive)");
}

std::string to_string(GammaTarget target) {
  return target == GammaTarget::precision ? "precision" : "variance";
}

GammaTarget parse_gamma_target(const std::string& text) {
  if (text == "precision") return GammaTarget::precision;
  if (text == "variance") return GammaTarget::variance;
  throw ParameterError("unknown gamma prior target '" + text + "'");
}

AgeGrid::AgeGrid(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 3) throw ParameterError("age grid needs at least 3 knots");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1])) throw ParameterError("age grid knots must be strictly increasing");
}

AgeGrid AgeGrid::uniform(double lo, double hi, std::size_t count) {
  if (count < 3) throw ParameterError("age grid needs at least 3 knots");
  if (!(hi > lo)) throw ParameterError("age grid: hi must exceed lo");
  std::vector<double> k(count);
  for (std::size_t i = 0; i < count; ++i)
    k[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  k.back() = hi;
  return AgeGrid(std::move(k));
}

AgeGrid::Bracket AgeGrid::locate(double z) const {
  if (knots_.empty()) throw GridError("age grid is empty");
  const double tol = 1e-9 * (hi() - lo());
  if (!(z >= lo() - tol && z <= hi() + tol)) {
    std::ostringstream os;
    os << "standardized age " << z << " outside age grid [" << lo() << ", " << hi() << "]";
    throw GridError(os.str());
  }
  z = std::clamp(z, lo(), hi());
  auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
  std::size_t j = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (j + 1 >= knots_.size()) j = knots_.size() - 2;
  const double w = (z - knots_[j]) / (knots_[j + 1] - knots_[j]);
  return {j, w};
}

double AgeGrid::interpolate(std::span<const double> values, double z) const {
  if (values.size() != knots_.size()) throw ParameterError("age effect length differs from grid size");
  const auto b = locate(z);
  return (1.0 - b.weight) * values[b.lower] + b.weight * values[b.lower + 1];
}

void ParameterSet::validate() const {
  if (!(sigma_eps > 0.0)) throw ParameterError("sigma_eps must be positive");
  if (!(sigma_age > 0.0)) throw ParameterError("sigma_age must be positive");
  if (f.size() != grid.size()) throw ParameterError("age effect length differs from grid size");
  const double all[] = {alpha_0, alpha_bp, alpha_age, alpha_bmi, alpha_sex, beta_0,
                        beta_bp, beta_bmi,  beta_sex,  c,         sigma_eps, sigma_age};
  for (double v : all)
    if (!std::isfinite(v)) throw ParameterError("parameter set holds a non-finite value");
}

double ParameterSet::age_effect(double age_std) const {
  if (grid.empty()) return 0.0;
  return grid.interpolate(f, age_std);
}

double eta_bp(const ParameterSet& t, const Participant& x, double eps) {
  return t.alpha_0 + t.alpha_bp * x.bp_i_std + t.alpha_age * x.age_std + t.alpha_bmi * x.bmi_std +
         t.alpha_sex * x.sex + eps;
}

double eta_m(const ParameterSet& t, const Participant& x, double eps) {
  return t.beta_0 + t.beta_bp * x.bp_i_std + t.age_effect(x.age_std) + t.beta_bmi * x.bmi_std +
         t.beta_sex * x.sex + t.c * eps;
}

double participant_log_likelihood(const ParameterSet& theta, const Participant& x, double eps) {
  if (!std::isfinite(x.bp_i_std) || !std::isfinite(x.age_std) || !std::isfinite(x.bmi_std))
    throw DataError("participant " + std::to_string(x.id) + " has non-finite covariates");
  double ll = 0.0;
  if (!x.missing()) {
    if (!x.bp_f_std) throw DataError("present participant " + std::to_string(x.id) + " lacks BP_F");
    ll += normal_logpdf(*x.bp_f_std, eta_bp(theta, x, eps), ParameterSet::sigma_bp);
  }
  const double eta = eta_m(theta, x, eps);
  ll += x.missing() ? log_logistic(eta) : log_logistic(-eta);
  return ll;
}

double log_likelihood(const ParameterSet& theta, const Cohort& cohort) {
  if (theta.eps.size() != cohort.size())
    throw ParameterError("shared effects do not match the cohort size");
  double total = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    total += participant_log_likelihood(theta, cohort.participants[i], theta.eps[i]);
  return total;
}

double rw2_quadratic_form(std::span<const double> f) {
  if (f.size() < 3) throw ParameterError("RW2 needs at least 3 values");
  double q = 0.0;
  for (std::size_t m = 0; m + 2 < f.size(); ++m) {
    const double d = f[m] - 2.0 * f[m + 1] + f[m + 2];
    q += d * d;
  }
  return q;
}

double rw2_penalty(std::span<const double> f, double sigma_age) {
  const double q = rw2_quadratic_form(f);
  const double sum = std::accumulate(f.begin(), f.end(), 0.0);
  if (std::abs(sum) > 1e-8) throw ConstraintError("RW2 effect violates the sum-to-zero constraint");
  if (!(sigma_age > 0.0)) return -std::numeric_limits<double>::infinity();
  const double rank = static_cast<double>(f.size() - 2);
  const double var = sigma_age * sigma_age;
  return -q / (2.0 * var) - 0.5 * rank * std::log(var) - 0.5 * rank * std::log(2.0 * std::numbers::pi);
}

double log_gamma_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

void PriorSpec::validate() const {
  if (!(coef_sd > 0.0)) throw ParameterError("prior: coefficient sd must be positive");
  if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0))
    throw ParameterError("prior: gamma shape and rate must be positive");
  if (!(c_sd > 0.0)) throw ParameterError("prior: sd of c must be positive");
}

double log_prior(const ParameterSet& t, const PriorSpec& priors, ModelKind kind) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (!(t.sigma_eps > 0.0) || !(t.sigma_age > 0.0)) return neg_inf;

  double lp = 0.0;
  const double coefs[] = {t.alpha_0, t.alpha_bp, t.alpha_age, t.alpha_bmi, t.alpha_sex,
                          t.beta_0,  t.beta_bp,  t.beta_bmi,  t.beta_sex};
  for (double b : coefs) lp += normal_logpdf(b, priors.coef_mean, priors.coef_sd);
  if (kind == ModelKind::spm) lp += normal_logpdf(t.c, priors.c_mean, priors.c_sd);

  auto hyper = [&](double sigma) {
    const double var = sigma * sigma;
    return priors.gamma_target == GammaTarget::precision
               ? log_gamma_density(1.0 / var, priors.gamma_shape, priors.gamma_rate)
               : log_gamma_density(var, priors.gamma_shape, priors.gamma_rate);
  };
  lp += hyper(t.sigma_eps) + hyper(t.sigma_age);

  if (!t.f.empty()) lp += rw2_penalty(t.f, t.sigma_age);
  for (double e : t.eps) lp += normal_logpdf(e, 0.0, t.sigma_eps);
  return lp;
}

}  // namespace spm
