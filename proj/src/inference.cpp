#include "spm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spm/diagnostics.hpp"
#include "spm/errors.hpp"
#include "spm/parallel.hpp"
#include "spm/polya_gamma.hpp"
#include "spm/random.hpp"
#include "spm/synth.hpp"

namespace spm {

void McmcConfig::validate() const {
  if (chains < 1) throw ParameterError("mcmc: at least one chain is required");
  if (!(warmup < iterations)) throw ParameterError("mcmc: warmup must be smaller than iterations");
  if (thin < 1) throw ParameterError("mcmc: thinning must be at least 1");
  if (adaptation_window < 1) throw ParameterError("mcmc: adaptation window must be at least 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw ParameterError("mcmc: target acceptance must lie in (0, 1)");
  if (age_knots < 3) throw ParameterError("mcmc: at least 3 age knots are required");
  if (fixed_sigma_eps && !(*fixed_sigma_eps > 0.0)) throw ParameterError("mcmc: fixed sigma_eps must be positive");
  if (fixed_sigma_age && !(*fixed_sigma_age > 0.0)) throw ParameterError("mcmc: fixed sigma_age must be positive");
}

std::vector<std::string> scalar_parameter_names(ModelKind kind) {
  std::vector<std::string> n = {"alpha_0", "alpha_bp", "alpha_age", "alpha_bmi", "alpha_sex",
                                "beta_0",  "beta_bp",  "beta_bmi",  "beta_sex"};
  if (kind == ModelKind::spm) n.push_back("c");
  n.push_back("sigma_eps");
  n.push_back("sigma_age");
  return n;
}

std::string f_name(std::size_t k) { return "f[" + std::to_string(k) + "]"; }

std::size_t FitResult::column(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return j;
  throw ParameterError("fit has no parameter named '" + name + "'");
}

bool FitResult::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t FitResult::f_offset() const { return column(f_name(0)); }

const ParameterSummary& FitResult::summary_of(const std::string& name) const {
  for (const auto& s : summary)
    if (s.name == name) return s;
  throw ParameterError("fit has no summary for '" + name + "'");
}

ParameterSet FitResult::parameters(std::size_t s) const {
  auto row = draws.row(static_cast<Eigen::Index>(s));
  auto at = [&](const char* name) { return row(static_cast<Eigen::Index>(column(name))); };
  ParameterSet t;
  t.alpha_0 = at("alpha_0");
  t.alpha_bp = at("alpha_bp");
  t.alpha_age = at("alpha_age");
  t.alpha_bmi = at("alpha_bmi");
  t.alpha_sex = at("alpha_sex");
  t.beta_0 = at("beta_0");
  t.beta_bp = at("beta_bp");
  t.beta_bmi = at("beta_bmi");
  t.beta_sex = at("beta_sex");
  t.c = model_kind == ModelKind::spm ? at("c") : 0.0;
  t.sigma_eps = at("sigma_eps");
  t.sigma_age = at("sigma_age");
  t.grid = grid;
  const std::size_t off = f_offset();
  t.f.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) t.f[k] = row(static_cast<Eigen::Index>(off + k));
  return t;
}

namespace {

constexpr double kRw2Jitter = 1e-10;

// Covariate rows and responses laid out for the sweep.
struct Design {
  std::size_t n = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor> x_bp;  // 1, bp, age, bmi, sex
  Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> z_m;   // 1, bp, bmi, sex
  std::vector<std::size_t> knot;
  std::vector<double> weight;
  std::vector<char> present;
  std::vector<double> y;
  std::vector<double> kappa;  // m - 1/2
};

Design make_design(const Cohort& cohort, const AgeGrid& grid) {
  Design d;
  d.n = cohort.size();
  d.x_bp.resize(static_cast<Eigen::Index>(d.n), 5);
  d.z_m.resize(static_cast<Eigen::Index>(d.n), 4);
  d.knot.resize(d.n);
  d.weight.resize(d.n);
  d.present.resize(d.n);
  d.y.resize(d.n, 0.0);
  d.kappa.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto& p = cohort.participants[i];
    const auto r = static_cast<Eigen::Index>(i);
    d.x_bp.row(r) << 1.0, p.bp_i_std, p.age_std, p.bmi_std, static_cast<double>(p.sex);
    d.z_m.row(r) << 1.0, p.bp_i_std, p.bmi_std, static_cast<double>(p.sex);
    const auto b = grid.locate(p.age_std);
    d.knot[i] = b.lower;
    d.weight[i] = b.weight;
    d.present[i] = p.missing() ? 0 : 1;
    if (!p.missing()) d.y[i] = *p.bp_f_std;
    d.kappa[i] = p.missing() ? 0.5 : -0.5;
  }
  return d;
}

Eigen::MatrixXd rw2_structure(std::size_t k) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t m = 0; m + 2 < k; ++m) {
    const Eigen::Index i = static_cast<Eigen::Index>(m);
    const double d[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) r(i + a, i + b) += d[a] * d[b];
  }
  return r;
}

// Random-walk Metropolis on log-variance with windowed step adaptation.
struct LogVarianceStep {
  double log_step = -1.0;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  std::size_t window_accepted = 0;
  std::size_t window_count = 0;
  std::size_t windows = 0;

  // log conditional of v: -(rank/2) log v - quad/(2 v) + log Gamma(v; a, b)
  double update(RngStream& rng, double v, double rank, double quad, const PriorSpec& pr) {
    auto logp = [&](double var) {
      return -0.5 * rank * std::log(var) - quad / (2.0 * var) +
             log_gamma_density(var, pr.gamma_shape, pr.gamma_rate) + std::log(var);
    };
    const double prop = v * std::exp(std::exp(log_step) * rng.normal());
    ++proposed;
    ++window_count;
    if (std::log(rng.uniform()) < logp(prop) - logp(v)) {
      ++accepted;
      ++window_accepted;
      return prop;
    }
    return v;
  }

  void adapt(std::size_t window, double target) {
    if (window_count < window) return;
    ++windows;
    const double rate = static_cast<double>(window_accepted) / static_cast<double>(window_count);
    log_step += (rate - target) / std::sqrt(static_cast<double>(windows));
    window_accepted = window_count = 0;
  }
};

// Probabilists' Gauss-Hermite rule (Golub-Welsch): sum_k w_k g(x_k) ~ E g(Z).
struct GaussHermite {
  std::vector<double> x, w;
  explicit GaussHermite(int n) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    for (int k = 0; k < n; ++k) {
      x.push_back(es.eigenvalues()(k));
      w.push_back(es.eigenvectors()(0, k) * es.eigenvectors()(0, k));
    }
  }
};

// Joint random-walk Metropolis on (alpha_0 shift, c, log sigma_eps) with the
// dropouts' eps integrated out. Shifting alpha_0 by d moves every observed
// eps by -d, which leaves the BP likelihood untouched. Proposal covariance is
// learned from warmup draws.
struct CollapsedBlock {
  static constexpr double kTarget = 0.234;
  Eigen::Matrix3d chol = Eigen::Vector3d(0.02, 0.05, 0.01).asDiagonal();
  double log_scale = 0.0;
  std::vector<Eigen::Vector3d> history;
  std::size_t window_accepted = 0, window_count = 0, windows = 0;

  void adapt(std::size_t window) {
    if (window_count < window) return;
    ++windows;
    const double rate = static_cast<double>(window_accepted) / static_cast<double>(window_count);
    log_scale += (rate - kTarget) / std::sqrt(static_cast<double>(windows));
    window_accepted = window_count = 0;
    // Covariance of the later half of the warmup history.
    const std::size_t from = history.size() / 2;
    const std::size_t used = history.size() - from;
    if (used >= window) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (std::size_t h = from; h < history.size(); ++h) mean += history[h];
      mean /= static_cast<double>(used);
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (std::size_t h = from; h < history.size(); ++h)
        cov += (history[h] - mean) * (history[h] - mean).transpose();
      cov /= static_cast<double>(used - 1);
      cov *= 2.38 * 2.38 / 3.0;
      cov.diagonal().array() += 1e-10;
      Eigen::LLT<Eigen::Matrix3d> llt(cov);
      if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
        log_scale = 0.0;
      }
    }
  }
};

struct ChainOutput {
  Eigen::MatrixXd draws;
  double sigma_eps_acceptance = -1.0;
  double sigma_age_acceptance = -1.0;
};

class GibbsChain {
 public:
  GibbsChain(const Design& d, const AgeGrid& grid, ModelKind kind, const PriorSpec& priors,
             const McmcConfig& cfg, RngStream rng)
      : d_(d),
        kind_(kind),
        pr_(priors),
        cfg_(cfg),
        rng_(std::move(rng)),
        k_(grid.size()),
        c_index_(4),
        f_index_(kind == ModelKind::spm ? 5 : 4),
        dim_(f_index_ + k_),
        rw2_(rw2_structure(k_)),
        gh_(16) {
    eps_.assign(d_.n, 0.0);
    omega_.assign(d_.n, 0.25);
    base_.assign(d_.n, 0.0);
    gamma_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    alpha_ = Eigen::Matrix<double, 5, 1>::Zero();
    tau_eps_ = cfg.fixed_sigma_eps ? 1.0 / (*cfg.fixed_sigma_eps * *cfg.fixed_sigma_eps) : 1.0;
    tau_age_ = cfg.fixed_sigma_age ? 1.0 / (*cfg.fixed_sigma_age * *cfg.fixed_sigma_age) : 1.0;
    // Dispersed start for the coefficients so that chains are distinguishable.
    for (int j = 0; j < 5; ++j) alpha_(j) = 0.5 * rng_.normal();
    for (std::size_t j = 0; j < 4; ++j) gamma_(static_cast<Eigen::Index>(j)) = 0.5 * rng_.normal();
    if (kind_ == ModelKind::spm) gamma_(c_index_) = 0.5 * rng_.normal();
  }

  ChainOutput run() {
    const std::size_t keep = cfg_.retained_per_chain();
    const std::size_t scalars = kind_ == ModelKind::spm ? 12 : 11;
    ChainOutput out;
    out.draws.resize(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(scalars + k_));
    std::size_t row = 0;
    for (std::size_t it = 0; it < cfg_.iterations; ++it) {
      sweep();
      if (kind_ == ModelKind::spm && !cfg_.prior_only) collapsed_move(it < cfg_.warmup);
      if (it < cfg_.warmup) {
        block_.adapt(cfg_.adaptation_window);
        eps_step_.adapt(cfg_.adaptation_window, cfg_.target_acceptance);
        age_step_.adapt(cfg_.adaptation_window, cfg_.target_acceptance);
      }
      check_finite(it);
      if (it >= cfg_.warmup && (it - cfg_.warmup) % cfg_.thin == 0) record(out.draws, row++);
    }
    if (eps_step_.proposed > 0)
      out.sigma_eps_acceptance = static_cast<double>(eps_step_.accepted) / static_cast<double>(eps_step_.proposed);
    if (age_step_.proposed > 0)
      out.sigma_age_acceptance = static_cast<double>(age_step_.accepted) / static_cast<double>(age_step_.proposed);
    return out;
  }

 private:
  double log_sigma_prior(double sigma) const {
    if (pr_.gamma_target == GammaTarget::precision) {
      const double tau = 1.0 / (sigma * sigma);
      return log_gamma_density(tau, pr_.gamma_shape, pr_.gamma_rate) + std::log(tau);
    }
    const double v = sigma * sigma;
    return log_gamma_density(v, pr_.gamma_shape, pr_.gamma_rate) + std::log(v);
  }

  // log P(m = 1) with eps ~ N(0, sigma^2) integrated out.
  double log_dropout_marginal(double b, double scale) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < gh_.x.size(); ++k) acc += gh_.w[k] * logistic(b + scale * gh_.x[k]);
    return std::log(acc);
  }

  double collapsed_log_target(double shift, double cc, double sigma) const {
    double lp = 0.0;
    const double inv2 = 1.0 / (2.0 * sigma * sigma);
    const double ls = std::log(sigma);
    for (std::size_t i = 0; i < d_.n; ++i) {
      if (d_.present[i]) {
        const double e = eps_[i] - shift;
        lp += -ls - e * e * inv2 + log_logistic(-(base_[i] + cc * e));
      } else {
        lp += log_dropout_marginal(base_[i], cc * sigma);
      }
    }
    const double a0 = alpha_(0) + shift - pr_.coef_mean;
    lp += -a0 * a0 / (2.0 * pr_.coef_sd * pr_.coef_sd);
    lp += -(cc - pr_.c_mean) * (cc - pr_.c_mean) / (2.0 * pr_.c_sd * pr_.c_sd);
    if (!cfg_.fixed_sigma_eps) lp += log_sigma_prior(sigma);
    return lp;
  }

  void collapsed_move(bool warmup) {
    const Eigen::Vector4d beta = gamma_.head<4>();
    for (std::size_t i = 0; i < d_.n; ++i) base_[i] = d_.z_m.row(static_cast<Eigen::Index>(i)).dot(beta) + f_at(i);
    double cc = gamma_(c_index_);
    double sigma = 1.0 / std::sqrt(tau_eps_);
    double current = collapsed_log_target(0.0, cc, sigma);
    for (int rep = 0; rep < 2; ++rep) {
      Eigen::Vector3d z(rng_.normal(), rng_.normal(), rng_.normal());
      Eigen::Vector3d step = std::exp(block_.log_scale) * (block_.chol * z);
      if (cfg_.fixed_sigma_eps) step(2) = 0.0;
      const double c_new = cc + step(1);
      const double s_new = sigma * std::exp(step(2));
      const double proposed = collapsed_log_target(step(0), c_new, s_new);
      ++block_.window_count;
      if (std::log(rng_.uniform()) < proposed - current) {
        ++block_.window_accepted;
        alpha_(0) += step(0);
        for (std::size_t i = 0; i < d_.n; ++i)
          if (d_.present[i]) eps_[i] -= step(0);
        cc = c_new;
        sigma = s_new;
        current = collapsed_log_target(0.0, cc, sigma);
      }
    }
    gamma_(c_index_) = cc;
    tau_eps_ = 1.0 / (sigma * sigma);
    // Dropouts' eps from their exact conditional: N(0, sigma^2) prior, accepted
    // with probability P(m = 1 | eps).
    for (std::size_t i = 0; i < d_.n; ++i) {
      if (d_.present[i]) continue;
      std::size_t tries = 0;
      for (;;) {
        const double e = sigma * rng_.normal();
        if (rng_.uniform() < logistic(base_[i] + cc * e)) {
          eps_[i] = e;
          break;
        }
        if (++tries > 1000000) throw NumericalError("dropout effect draw failed to accept");
      }
    }
    if (warmup) block_.history.emplace_back(alpha_(0), cc, std::log(sigma));
  }

  double c() const { return kind_ == ModelKind::spm ? gamma_(c_index_) : 0.0; }

  double f_at(std::size_t i) const {
    const auto j = static_cast<Eigen::Index>(f_index_ + d_.knot[i]);
    return (1.0 - d_.weight[i]) * gamma_(j) + d_.weight[i] * gamma_(j + 1);
  }

  void sweep() {
    const double cc = c();
    const double s2 = ParameterSet::sigma_bp * ParameterSet::sigma_bp;
    const bool lik = !cfg_.prior_only;
    const Eigen::Vector4d beta = gamma_.head<4>();

    // 1. Polya-Gamma weights.
    for (std::size_t i = 0; i < d_.n; ++i) {
      base_[i] = d_.z_m.row(static_cast<Eigen::Index>(i)).dot(beta) + f_at(i);
      omega_[i] = lik ? sample_polya_gamma(rng_, base_[i] + cc * eps_[i]) : 0.0;
    }

    // 2. BP coefficients with eps integrated out.
    const double coef_prec = 1.0 / (pr_.coef_sd * pr_.coef_sd);
    Eigen::Matrix<double, 5, 5> prec = Eigen::Matrix<double, 5, 5>::Identity() * coef_prec;
    Eigen::Matrix<double, 5, 1> lin = Eigen::Matrix<double, 5, 1>::Constant(pr_.coef_mean * coef_prec);
    if (lik) {
      for (std::size_t i = 0; i < d_.n; ++i) {
        if (!d_.present[i]) continue;
        const double a = tau_eps_ + omega_[i] * cc * cc;
        const double g = cc * (d_.kappa[i] - omega_[i] * base_[i]);
        const double denom = 1.0 + a * s2;
        const double tau_i = a / denom;
        const double h_i = g / denom;
        const auto x = d_.x_bp.row(static_cast<Eigen::Index>(i)).transpose();
        prec.selfadjointView<Eigen::Lower>().rankUpdate(x, tau_i);
        lin += x * (tau_i * d_.y[i] - h_i);
      }
    }
    {
      Eigen::LLT<Eigen::Matrix<double, 5, 5>> llt(prec.selfadjointView<Eigen::Lower>());
      if (llt.info() != Eigen::Success) throw NumericalError("BP coefficient precision is not positive definite");
      Eigen::Matrix<double, 5, 1> z;
      for (int j = 0; j < 5; ++j) z(j) = rng_.normal();
      alpha_ = llt.solve(lin) + llt.matrixU().solve(z);
    }

    // 3. Shared effects.
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < d_.n; ++i) {
      double a = tau_eps_ + omega_[i] * cc * cc;
      double g = lik ? cc * (d_.kappa[i] - omega_[i] * base_[i]) : 0.0;
      if (lik && d_.present[i]) {
        const double r = d_.y[i] - d_.x_bp.row(static_cast<Eigen::Index>(i)).dot(alpha_);
        a += 1.0 / s2;
        g += r / s2;
      }
      eps_[i] = g / a + rng_.normal() / std::sqrt(a);
      sum_sq += eps_[i] * eps_[i];
    }

    // 4. Dropout block (beta, c, f) with sum-to-zero on f.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    if (lik) {
      std::size_t idx[7];
      double w[7];
      for (std::size_t i = 0; i < d_.n; ++i) {
        std::size_t nz = 0;
        for (std::size_t j = 0; j < 4; ++j) {
          idx[nz] = j;
          w[nz++] = d_.z_m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        if (kind_ == ModelKind::spm) {
          idx[nz] = c_index_;
          w[nz++] = eps_[i];
        }
        idx[nz] = f_index_ + d_.knot[i];
        w[nz++] = 1.0 - d_.weight[i];
        idx[nz] = f_index_ + d_.knot[i] + 1;
        w[nz++] = d_.weight[i];
        const double om = omega_[i];
        const double ka = d_.kappa[i];
        for (std::size_t u = 0; u < nz; ++u) {
          b(static_cast<Eigen::Index>(idx[u])) += ka * w[u];
          const double ow = om * w[u];
          for (std::size_t v = 0; v <= u; ++v)
            q(static_cast<Eigen::Index>(idx[u]), static_cast<Eigen::Index>(idx[v])) += ow * w[v];
        }
      }
      // Accumulated entries are in either triangle; fold into the lower one.
      for (Eigen::Index r = 0; r < q.rows(); ++r)
        for (Eigen::Index s = r + 1; s < q.cols(); ++s) {
          q(s, r) += q(r, s);
          q(r, s) = 0.0;
        }
    }
    for (std::size_t j = 0; j < 4; ++j) {
      q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += coef_prec;
      b(static_cast<Eigen::Index>(j)) += pr_.coef_mean * coef_prec;
    }
    if (kind_ == ModelKind::spm) {
      const double cp = 1.0 / (pr_.c_sd * pr_.c_sd);
      q(c_index_, c_index_) += cp;
      b(c_index_) += pr_.c_mean * cp;
    }
    const auto f0 = static_cast<Eigen::Index>(f_index_);
    const auto kk = static_cast<Eigen::Index>(k_);
    q.block(f0, f0, kk, kk).triangularView<Eigen::Lower>() += tau_age_ * rw2_;
    q.block(f0, f0, kk, kk).diagonal().array() += kRw2Jitter;

    Eigen::LLT<Eigen::MatrixXd> llt(q.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw NumericalError("dropout block precision is not positive definite");
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng_.normal();
    Eigen::VectorXd x = llt.solve(b) + llt.matrixU().solve(z);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    a.segment(f0, kk).setOnes();
    const Eigen::VectorXd qa = llt.solve(a);
    x -= qa * (a.dot(x) / a.dot(qa));
    gamma_ = x;

    // 5. Hyperparameters.
    const double n = static_cast<double>(d_.n);
    const double rank = static_cast<double>(k_ - 2);
    const Eigen::VectorXd f = gamma_.segment(f0, kk);
    const double quad_f = f.dot(rw2_ * f);
    if (!cfg_.fixed_sigma_eps) {
      if (pr_.gamma_target == GammaTarget::precision)
        tau_eps_ = rng_.gamma(pr_.gamma_shape + 0.5 * n, pr_.gamma_rate + 0.5 * sum_sq);
      else
        tau_eps_ = 1.0 / eps_step_.update(rng_, 1.0 / tau_eps_, n, sum_sq, pr_);
    }
    if (!cfg_.fixed_sigma_age) {
      if (pr_.gamma_target == GammaTarget::precision)
        tau_age_ = rng_.gamma(pr_.gamma_shape + 0.5 * rank, pr_.gamma_rate + 0.5 * quad_f);
      else
        tau_age_ = 1.0 / age_step_.update(rng_, 1.0 / tau_age_, rank, quad_f, pr_);
    }
  }

  void check_finite(std::size_t it) const {
    const bool ok = alpha_.allFinite() && gamma_.allFinite() && std::isfinite(tau_eps_) &&
                    std::isfinite(tau_age_) && tau_eps_ > 0.0 && tau_age_ > 0.0;
    if (!ok) {
      std::ostringstream os;
      os << "sampler diverged at iteration " << it << " of chain " << rng_.stream_id()
         << " (non-finite state)";
      throw NumericalError(os.str());
    }
  }

  void record(Eigen::MatrixXd& out, std::size_t row) const {
    auto r = out.row(static_cast<Eigen::Index>(row));
    Eigen::Index j = 0;
    for (int a = 0; a < 5; ++a) r(j++) = alpha_(a);
    for (Eigen::Index a = 0; a < 4; ++a) r(j++) = gamma_(a);
    if (kind_ == ModelKind::spm) r(j++) = gamma_(c_index_);
    r(j++) = 1.0 / std::sqrt(tau_eps_);
    r(j++) = 1.0 / std::sqrt(tau_age_);
    for (std::size_t k = 0; k < k_; ++k) r(j++) = gamma_(static_cast<Eigen::Index>(f_index_ + k));
  }

  const Design& d_;
  ModelKind kind_;
  PriorSpec pr_;
  McmcConfig cfg_;
  RngStream rng_;
  std::size_t k_;
  Eigen::Index c_index_;
  std::size_t f_index_;
  std::size_t dim_;
  Eigen::MatrixXd rw2_;
  GaussHermite gh_;
  CollapsedBlock block_;

  Eigen::Matrix<double, 5, 1> alpha_;
  Eigen::VectorXd gamma_;
  std::vector<double> eps_, omega_, base_;
  double tau_eps_ = 1.0, tau_age_ = 1.0;
  LogVarianceStep eps_step_, age_step_;
};

}  // namespace

FitResult fit(const Cohort& cohort, ModelKind kind, const PriorSpec& priors, const McmcConfig& cfg) {
  cfg.validate();
  priors.validate();
  if (cohort.empty()) throw DataError("cannot fit an empty cohort");
  cohort.validate();

  FitResult result;
  result.model_kind = kind;
  result.priors = priors;
  result.config = cfg;
  result.standardization = cohort.standardization;
  result.grid = fitting_age_grid(cohort.standardization, cfg.age_knots);
  result.chains = cfg.chains;
  result.names = scalar_parameter_names(kind);
  for (std::size_t k = 0; k < result.grid.size(); ++k) result.names.push_back(f_name(k));

  const Design design = make_design(cohort, result.grid);
  std::vector<ChainOutput> outputs(cfg.chains);
  parallel_for(cfg.chains, cfg.workers, [&](std::size_t ch) {
    GibbsChain chain(design, result.grid, kind, priors, cfg, RngStream(cfg.seed, ch));
    outputs[ch] = chain.run();
  });

  const Eigen::Index per = static_cast<Eigen::Index>(cfg.retained_per_chain());
  result.draws.resize(per * static_cast<Eigen::Index>(cfg.chains), static_cast<Eigen::Index>(result.names.size()));
  for (std::size_t ch = 0; ch < cfg.chains; ++ch) {
    result.draws.middleRows(per * static_cast<Eigen::Index>(ch), per) = outputs[ch].draws;
    for (auto [rate, label] : {std::pair{outputs[ch].sigma_eps_acceptance, "sigma_eps"},
                               std::pair{outputs[ch].sigma_age_acceptance, "sigma_age"}}) {
      if (rate >= 0.0 && (rate < 0.1 || rate > 0.9)) {
        std::ostringstream os;
        os << "chain " << ch << ": Metropolis acceptance for " << label << " is " << rate;
        result.warnings.push_back(os.str());
      }
    }
  }

  result.summary = summarize_draws(result.names, result.draws, result.chains);
  for (const auto& s : result.summary) {
    if (std::isfinite(s.rhat) && s.rhat > 1.1) {
      result.rhat_warning = true;
      std::ostringstream os;
      os << "split-Rhat of " << s.name << " is " << s.rhat;
      result.warnings.push_back(os.str());
    }
  }
  return result;
}

std::vector<ParameterSummary> summarize_draws(const std::vector<std::string>& names,
                                              const Eigen::MatrixXd& draws, std::size_t chains) {
  if (draws.rows() == 0) throw DataError("no retained draws to summarize");
  if (static_cast<std::size_t>(draws.cols()) != names.size())
    throw ParameterError("draw matrix width differs from the number of parameter names");
  if (chains == 0 || static_cast<std::size_t>(draws.rows()) % chains != 0)
    throw ParameterError("draw count is not a multiple of the chain count");
  const std::size_t per = static_cast<std::size_t>(draws.rows()) / chains;

  std::vector<ParameterSummary> out;
  out.reserve(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto col = draws.col(static_cast<Eigen::Index>(j));
    std::vector<double> v(col.data(), col.data() + col.size());
    ParameterSummary s;
    s.name = names[j];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    s.mean = mean;
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;

    std::vector<std::vector<double>> by_chain(chains);
    for (std::size_t c = 0; c < chains; ++c) by_chain[c].assign(v.begin() + static_cast<std::ptrdiff_t>(c * per),
                                                                 v.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
    s.rhat = split_rhat(by_chain);
    s.ess = effective_sample_size(by_chain);

    std::sort(v.begin(), v.end());
    s.lower = sorted_percentile(v, 0.025);
    s.upper = sorted_percentile(v, 0.975);
    // Guard against round-off in the running mean of constant draws.
    s.mean = std::clamp(s.mean, s.lower, s.upper);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ParameterSummary> posterior_summary(const FitResult& fit) {
  return summarize_draws(fit.names, fit.draws, fit.chains);
}

AgeEffectCurve age_effect_curve(const FitResult& fit) {
  if (fit.draws.rows() == 0) throw DataError("no retained draws");
  AgeEffectCurve curve;
  curve.grid = fit.grid.knots();
  const std::size_t off = fit.f_offset();
  for (std::size_t k = 0; k < fit.grid.size(); ++k) {
    const auto col = fit.draws.col(static_cast<Eigen::Index>(off + k));
    std::vector<double> v(col.data(), col.data() + col.size());
    curve.mean.push_back(col.mean());
    std::sort(v.begin(), v.end());
    curve.lower.push_back(sorted_percentile(v, 0.025));
    curve.upper.push_back(sorted_percentile(v, 0.975));
  }
  return curve;
}

}  // namespace spm
