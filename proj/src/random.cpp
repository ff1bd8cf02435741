#include "spm/random.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "spm/errors.hpp"

namespace spm {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a;
  std::uint64_t h = splitmix64(x);
  x = h ^ (b * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(x);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t x = mix_keys(seed, stream_id);
  for (auto& s : s_) s = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream::result_type RngStream::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

RngStream RngStream::substream(std::uint64_t child) const {
  return RngStream(mix_keys(seed_, stream_id_), child);
}

double RngStream::uniform() {
  // 53 random bits, shifted by half an ulp so that 0 is excluded.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(*this); }

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw ParameterError("gamma: shape and rate must be positive");
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(*this);
}

double SkewNormalParams::delta() const { return shape / std::sqrt(1.0 + shape * shape); }

double SkewNormalParams::mean() const {
  return location + scale * delta() * std::sqrt(2.0 / std::numbers::pi);
}

void SkewNormalParams::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ParameterError("skew normal: scale must be positive, got " + std::to_string(scale));
  if (!std::isfinite(location) || !std::isfinite(shape))
    throw ParameterError("skew normal: location and shape must be finite");
}

double sample_normal(RngStream& rng, double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw ParameterError("normal: sd must be positive, got " + std::to_string(sd));
  return mean + sd * rng.normal();
}

double sample_skew_normal(RngStream& rng, const SkewNormalParams& p) {
  p.validate();
  const double d = p.delta();
  const double z1 = std::abs(rng.normal());
  const double z2 = rng.normal();
  return p.location + p.scale * (d * z1 + std::sqrt(1.0 - d * d) * z2);
}

double skew_normal_pdf(double x, const SkewNormalParams& p) {
  p.validate();
  const double z = (x - p.location) / p.scale;
  return 2.0 / p.scale * normal_pdf(z) * normal_cdf(p.shape * z);
}

double sample_truncated_mixture_normal(RngStream& rng, std::span<const double> weights,
                                       std::span<const double> means,
                                       std::span<const double> sds, double lower,
                                       double upper) {
  if (weights.empty()) throw ParameterError("mixture: no components");
  if (weights.size() != means.size() || weights.size() != sds.size())
    throw ParameterError("mixture: weights, means and sds differ in length");
  if (!(lower < upper)) throw ParameterError("mixture: lower bound must be below upper bound");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("mixture: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("mixture: weights must sum to 1");
  for (double s : sds)
    if (!(s > 0.0)) throw ParameterError("mixture: sds must be positive");

  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = weights[0];
  while (u >= acc && k + 1 < weights.size()) acc += weights[++k];

  double x = sample_normal(rng, means[k], sds[k]);
  const std::size_t last = weights.size() - 1;
  while (x < lower || x > upper) {
    const std::size_t redraw = x < lower ? 0 : last;
    x = sample_normal(rng, means[redraw], sds[redraw]);
  }
  return x;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("logit: argument must lie in (0, 1)");
  return std::log(p) - std::log1p(-p);
}

double log_logistic(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile: argument must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace spm
