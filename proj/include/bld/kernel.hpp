#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bld/rng.hpp"
#include "bld/schedule.hpp"

namespace bld {

/// One byte per bit; every element is exactly 0 or 1.
using BitVector = std::vector<std::uint8_t>;
/// Per-bit Bernoulli parameters P(bit = 1).
using ProbVector = std::vector<double>;
using BitSpan = std::span<const std::uint8_t>;
using ProbSpan = std::span<const double>;

/// Clamp applied to probabilities that later feed a logarithm.
inline constexpr double kProbEps = 1e-7;

inline double clamp_prob(double p) {
  return p < kProbEps ? kProbEps : (p > 1.0 - kProbEps ? 1.0 - kProbEps : p);
}

bool is_binary(BitSpan bits);

/// q(z^t = 1 | z^{t-1}) = z^{t-1}(1 - beta^t) + beta^t / 2, for 1 <= t <= T.
/// Returned unclamped: these are exact chain parameters used for sampling.
ProbVector forward_one_step_params(BitSpan z_prev, int t, const NoiseSchedule& s);

/// q(z^t = 1 | z^0) = k^t z^0 + b^t, for 0 <= t <= T (t = 0 returns z^0).
ProbVector marginal_params(BitSpan z0, int t, const NoiseSchedule& s);

/// Scalar Bayes posterior P(z^{t-1} = 1 | z^t, z^0), unclamped.
double bayes_posterior(int z_t, int z0, int t, const NoiseSchedule& s);

/// P(z^{t-1} = 1 | z^t, z^0) per bit, for 2 <= t <= T, clamped.
ProbVector bayes_posterior_params(BitSpan z_t, BitSpan z0, int t, const NoiseSchedule& s);

/// Scalar reverse mixture: posterior marginalized over z^0 ~ B(p_z0), unclamped.
double reverse_mixture(int z_t, double p_z0, int t, const NoiseSchedule& s);

/// p(z^{t-1} = 1 | z^t) = q(.|z^t, z^0=0)(1 - p_z0) + q(.|z^t, z^0=1) p_z0,
/// for 2 <= t <= T; p_z0 must lie in [0, 1]. Clamped.
ProbVector reverse_mixture_params(BitSpan z_t, ProbSpan p_z0, int t, const NoiseSchedule& s);

/// Index convention for the compact normalized reverse formula.
enum class ClosedFormIndexing {
  /// Uses k^t and 0.5 b^t in the z^0 factor, exactly as commonly printed.
  AsPrinted,
  /// Uses k^{t-1} and b^{t-1}, i.e. the z^{t-1} marginal under predicted z^0.
  Shifted,
};

/// Compact normalized reverse step
///   [(1-beta^t) z^t + beta^t/2] * [k' p + b'] / Z
/// with (k', b') chosen by `indexing`. This is a fast path only; the exact
/// mixture above is authoritative and the two are compared in tests.
ProbVector reverse_closed_form_params(BitSpan z_t, ProbSpan p_z0, int t, const NoiseSchedule& s,
                                      ClosedFormIndexing indexing);

/// P(z^0 = 1) = (1 - z^t) * flip + z^t * (1 - flip).
ProbVector flip_to_z0_probs(BitSpan z_t, ProbSpan flip);

/// Each bit is 1 iff a uniform draw falls below p_i. One draw per bit in
/// index order.
BitVector sample_bits(ProbSpan p, Rng& rng);

/// KL(q(z^T | z^0) || B(0.5)), mean per bit; does not depend on the model.
double prior_kl_terminal(BitSpan z0, const NoiseSchedule& s);

}  // namespace bld
