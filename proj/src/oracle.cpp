#include "bld/oracle.hpp"

#include <cmath>

#include "bld/error.hpp"

namespace bld::oracle {

TransitionMatrix identity() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

TransitionMatrix multiply(const TransitionMatrix& a, const TransitionMatrix& b) {
  TransitionMatrix c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  return c;
}

TransitionMatrix one_step(const NoiseSchedule& s, int t) {
  if (t < 1 || t > s.T) throw RangeError("oracle::one_step: step out of range");
  const double beta = s.beta[t];
  // From state 0 the bit turns on with beta/2; from state 1 it stays on
  // with 1 - beta/2.
  return {{{1.0 - 0.5 * beta, 0.5 * beta}, {0.5 * beta, 1.0 - 0.5 * beta}}};
}

TransitionMatrix compose_marginal(const NoiseSchedule& s, int t) {
  if (t < 0 || t > s.T) throw RangeError("oracle::compose_marginal: step out of range");
  TransitionMatrix m = identity();
  for (int i = 1; i <= t; ++i) m = multiply(m, one_step(s, i));
  return m;
}

double enumerate_posterior(int z_t, int z0, int t, const NoiseSchedule& s) {
  const TransitionMatrix before = compose_marginal(s, t - 1);
  const TransitionMatrix step = one_step(s, t);
  double joint[2];
  for (int v = 0; v < 2; ++v) joint[v] = before[z0][v] * step[v][z_t];
  return joint[1] / (joint[0] + joint[1]);
}

double exact_reverse(int z_t, double p_z0, int t, const NoiseSchedule& s) {
  if (t < 2 || t > s.T) throw RangeError("oracle::exact_reverse: step out of range");
  const double prior[2] = {1.0 - p_z0, p_z0};
  double total = 0.0;
  for (int z0 = 0; z0 < 2; ++z0) {
    if (prior[z0] == 0.0) continue;
    total += prior[z0] * enumerate_posterior(z_t, z0, t, s);
  }
  return total;
}

double numeric_kl(double p, double q) {
  const double pp[2] = {1.0 - p, p};
  const double qq[2] = {1.0 - q, q};
  double total = 0.0;
  for (int x = 0; x < 2; ++x)
    if (pp[x] > 0.0) total += pp[x] * std::log(pp[x] / qq[x]);
  return total;
}

double vlb_by_summation(BitSpan z0, BitSpan z_t, ProbSpan flip_pred, int t, const NoiseSchedule& s) {
  const std::size_t D = z0.size();
  double total = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double f = clamp_prob(flip_pred[i]);
    const double p_z0 = z_t[i] ? 1.0 - f : f;
    if (t == 1) {
      const double like = z0[i] ? p_z0 : 1.0 - p_z0;
      total -= std::log(like);
      continue;
    }
    const double q = clamp_prob(enumerate_posterior(z_t[i], z0[i], t, s));
    const double p = clamp_prob(exact_reverse(z_t[i], p_z0, t, s));
    total += numeric_kl(q, p);
  }
  return total / static_cast<double>(D);
}

std::uint32_t bits_to_index(BitSpan bits) {
  std::uint32_t idx = 0;
  for (auto b : bits) idx = (idx << 1) | (b & 1u);
  return idx;
}

BitVector index_to_bits(std::uint32_t index, int d) {
  BitVector bits(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) bits[i] = (index >> (d - 1 - i)) & 1u;
  return bits;
}

ExplicitDistribution empirical(std::span<const BitVector> samples, int d) {
  if (d < 1 || d > 16) throw RangeError("explicit distributions need 1 <= d <= 16");
  ExplicitDistribution e{d, std::vector<double>(std::size_t{1} << d, 0.0)};
  if (samples.empty()) return e;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& x : samples) {
    if (x.size() != static_cast<std::size_t>(d)) throw DimensionError("sample length != d");
    e.prob[bits_to_index(x)] += w;
  }
  return e;
}

double tv_distance(std::span<const BitVector> samples, const ExplicitDistribution& target) {
  if (target.prob.size() != (std::size_t{1} << target.d))
    throw DimensionError("target distribution has the wrong support size");
  const ExplicitDistribution e = empirical(samples, target.d);
  double l1 = 0.0;
  for (std::size_t x = 0; x < e.prob.size(); ++x) l1 += std::abs(e.prob[x] - target.prob[x]);
  return 0.5 * l1;
}

double mass_outside_support(std::span<const BitVector> samples, const ExplicitDistribution& target) {
  if (samples.empty()) return 0.0;
  std::size_t outside = 0;
  for (const auto& x : samples)
    if (target.prob[bits_to_index(x)] <= 0.0) ++outside;
  return static_cast<double>(outside) / static_cast<double>(samples.size());
}

}  // namespace bld::oracle
