#pragma once
// Posterior predictive distributions for new participants and the proper
// scoring rules used to compare models.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spm/cohort.hpp"
#include "spm/inference.hpp"
#include "spm/random.hpp"

namespace spm {

enum class Conditioning { unconditional, present, missing };

std::string to_string(Conditioning c);
Conditioning parse_conditioning(const std::string& text);

struct PredictOptions {
  std::size_t samples = 4000;
  // Grid for eps given m: equally spaced nodes over +-grid_halfwidth sigma_eps.
  std::size_t grid_nodes = 41;
  double grid_halfwidth = 6.0;
  std::uint64_t seed = 1;
  std::size_t workers = 0;

  void validate() const;
};

struct PredictiveDistribution {
  Conditioning condition = Conditioning::unconditional;
  std::vector<std::int64_t> ids;
  Eigen::MatrixXd bp_f;  // participants x samples
  Eigen::MatrixXd p;     // dropout probability draws, same shape
  std::vector<std::string> notes;

  std::size_t size() const { return ids.size(); }
  std::size_t samples() const { return static_cast<std::size_t>(bp_f.cols()); }
};

// Evaluates the predictive distribution one participant at a time. Sample s
// uses retained draw s * D / S. The uniforms driving sample s come from the
// participant's own substream, so conditional and unconditional predictions
// built with the same seed share their random numbers.
class Predictor {
 public:
  Predictor(const FitResult& fit, const PredictOptions& options);

  // True when conditioning has no effect because every draw has c = 0.
  bool c_degenerate() const { return c_degenerate_; }

  // Fills bp_f and p (resized to the sample count) for participant x.
  void sample(const Participant& x, Conditioning cond, RngStream rng, std::vector<double>& bp_f,
              std::vector<double>& p) const;

  // Posterior-mean prediction of BP_F, with E[eps | m] evaluated on the grid
  // (exact for the unconditional case).
  double mean_bp_f(const Participant& x, Conditioning cond) const;
  // Posterior mean of P(m = 1) with eps integrated out on the grid.
  double mean_dropout_probability(const Participant& x) const;

  // Grid approximation of E[eps | m] for given dropout predictor b (without
  // the eps term), association c and sigma_eps.
  double conditional_eps_mean(double b, double c, double sigma, int m) const;

 private:
  struct Draw {
    double alpha[5];
    double beta[4];
    double c;
    double sigma;
    std::size_t row;
  };
  double f_at(std::size_t row, const AgeGrid::Bracket& b) const;
  const Draw& draw_for_sample(std::size_t s) const;

  const FitResult& fit_;
  PredictOptions opt_;
  std::vector<Draw> draws_;
  std::size_t f_offset_;
  bool c_degenerate_ = false;
  std::vector<double> unit_nodes_;  // grid in units of sigma
  std::vector<double> unit_density_;
};

PredictiveDistribution predict(const FitResult& fit, const Cohort& cohort, Conditioning cond,
                               const PredictOptions& options);

double crps_gaussian(double mu, double sigma, double y);
// mean|X - y| - mean|X - X'| / 2 over all ordered pairs, by the sorted formula.
double crps_empirical(std::span<const double> sample, double y);
double brier(std::span<const double> p_mean, std::span<const int> m);

struct ScoreReport {
  std::size_t n_present = 0;
  std::size_t n_missing = 0;
  double crps_present = 0.0;
  // Available only when dropouts carry oracle outcomes.
  std::optional<double> crps_missing;
  std::optional<double> crps_all;
  double brier_all = 0.0;
  std::optional<double> brier_present;
  std::optional<double> brier_missing;
  double mae_present = 0.0;  // posterior-mean BP_F predictions
  std::optional<double> mae_all;
};

ScoreReport score(const PredictiveDistribution& pred, const Cohort& cohort);

// Scores without materializing the sample matrices.
ScoreReport score_streaming(const FitResult& fit, const Cohort& cohort, const PredictOptions& options);

struct MaeComparison {
  double conditional = 0.0;
  double unconditional = 0.0;
  double difference = 0.0;  // conditional - unconditional
  std::size_t evaluated = 0;
  bool fell_back = false;  // every c draw was zero
};

// MAE of posterior-mean predictions for the present participants, with and
// without conditioning on m = 0.
MaeComparison mae_comparison(const FitResult& fit, const Cohort& cohort, const PredictOptions& options);

}  // namespace spm
