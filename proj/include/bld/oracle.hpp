#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bld/kernel.hpp"
#include "bld/schedule.hpp"

/// Brute-force reference computations. Everything here is derived from the
/// one-step transition matrices alone (beta only, never k or b) and shares
/// no code with the closed-form kernels it checks.
namespace bld::oracle {

/// Row-stochastic 2x2 matrix; rows index the earlier state, columns the later.
using TransitionMatrix = std::array<std::array<double, 2>, 2>;

TransitionMatrix identity();
TransitionMatrix multiply(const TransitionMatrix& a, const TransitionMatrix& b);

/// One-step matrix for step t built from beta^t.
TransitionMatrix one_step(const NoiseSchedule& s, int t);

/// Product of the first t one-step matrices: P(z^t = col | z^0 = row).
TransitionMatrix compose_marginal(const NoiseSchedule& s, int t);

/// P(z^{t-1} = 1 | z^t, z^0) by enumerating the joint over z^{t-1}.
double enumerate_posterior(int z_t, int z0, int t, const NoiseSchedule& s);

/// Mixture over z^0 ~ B(p_z0) of the enumerated posterior, single bit.
double exact_reverse(int z_t, double p_z0, int t, const NoiseSchedule& s);

/// Sum over x in {0,1} of p(x) ln(p(x)/q(x)).
double numeric_kl(double p, double q);

/// Bound term for residual predictions, evaluated bit by bit from
/// exact_reverse and numeric_kl.
double vlb_by_summation(BitSpan z0, BitSpan z_t, ProbSpan flip_pred, int t, const NoiseSchedule& s);

/// Explicit distribution over {0,1}^d, indexed by the integer whose bit d-1-i
/// is element i (MSB-first).
struct ExplicitDistribution {
  int d = 0;
  std::vector<double> prob;  // length 2^d
};

std::uint32_t bits_to_index(BitSpan bits);
BitVector index_to_bits(std::uint32_t index, int d);

/// Empirical distribution of samples (d <= 16).
ExplicitDistribution empirical(std::span<const BitVector> samples, int d);

/// Half the L1 distance between the empirical distribution of `samples` and
/// `target`. Requires d <= 16.
double tv_distance(std::span<const BitVector> samples, const ExplicitDistribution& target);

/// Fraction of samples that fall outside the support of `target`.
double mass_outside_support(std::span<const BitVector> samples, const ExplicitDistribution& target);

}  // namespace bld::oracle
