#pragma once
// Seedable random streams and the handful of distributions the cohort
// generator and the sampler need.

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace spm {

// xoshiro256** stream keyed by (seed, stream_id). The 256-bit state is
// expanded from both keys with splitmix64, so any (seed, stream_id) pair can
// be re-created on any thread without replaying other streams.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Child stream keyed by this stream's identity and `child`; independent of
  // how far this stream has advanced.
  RngStream substream(std::uint64_t child) const;

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Exponential with rate 1.
  double exponential();
  // Gamma with the given shape and rate.
  double gamma(double shape, double rate);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Mixes two 64-bit keys into one; used to derive reproducible sub-seeds.
std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b);

struct SkewNormalParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  // delta = shape / sqrt(1 + shape^2)
  double delta() const;
  double mean() const;
  void validate() const;
};

double sample_normal(RngStream& rng, double mean, double sd);
double sample_skew_normal(RngStream& rng, const SkewNormalParams& p);
double skew_normal_pdf(double x, const SkewNormalParams& p);

// Mixture draw with the asymmetric truncation rule of the age generator:
// values below `lower` are redrawn from the first component, values above
// `upper` from the last one, until the value lies inside [lower, upper].
double sample_truncated_mixture_normal(RngStream& rng, std::span<const double> weights,
                                       std::span<const double> means,
                                       std::span<const double> sds, double lower,
                                       double upper);

double logistic(double x);
double logit(double p);
// log(logistic(x)) without overflow.
double log_logistic(double x);

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);
double normal_logpdf(double x, double mean, double sd);

}  // namespace spm
