#pragma once

#include "spm/random.hpp"

namespace spm {

// Exact draw from PG(1, z) using Devroye's alternating-series sampler
// (Polson, Scott & Windle, 2013). With omega ~ PG(1, eta), the Bernoulli
// logit likelihood becomes Gaussian in eta, which is what makes the dropout
// submodel conjugate in the Gibbs sweep.
double sample_polya_gamma(RngStream& rng, double z);

// E[PG(1, z)] = tanh(z/2) / (2z), with the limit 1/4 at z = 0.
double polya_gamma_mean(double z);

}  // namespace spm
