#include "bld/kernel.hpp"

#include <cmath>
#include <string>

#include "bld/error.hpp"

namespace bld {

namespace {

void check_step(int t, int lo, const NoiseSchedule& s, const char* op) {
  if (t < lo || t > s.T)
    throw RangeError(std::string(op) + ": step " + std::to_string(t) + " outside [" +
                     std::to_string(lo) + ", " + std::to_string(s.T) + "]");
}

void check_same_length(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                         std::to_string(b));
}

// q(z^t | z^{t-1}) for scalar bits.
double one_step_prob(int z_t, int z_prev, int t, const NoiseSchedule& s) {
  const double p1 = z_prev * (1.0 - s.beta[t]) + 0.5 * s.beta[t];
  return z_t ? p1 : 1.0 - p1;
}

// q(z^t | z^0) for scalar bits.
double marginal_prob(int z_t, int z0, int t, const NoiseSchedule& s) {
  const double p1 = s.k[t] * z0 + s.b[t];
  return z_t ? p1 : 1.0 - p1;
}

}  // namespace

bool is_binary(BitSpan bits) {
  for (auto v : bits)
    if (v > 1) return false;
  return true;
}

ProbVector forward_one_step_params(BitSpan z_prev, int t, const NoiseSchedule& s) {
  check_step(t, 1, s, "forward_one_step_params");
  const double keep = 1.0 - s.beta[t];
  const double drift = 0.5 * s.beta[t];
  ProbVector p(z_prev.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = z_prev[i] * keep + drift;
  return p;
}

ProbVector marginal_params(BitSpan z0, int t, const NoiseSchedule& s) {
  check_step(t, 0, s, "marginal_params");
  ProbVector p(z0.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = s.k[t] * z0[i] + s.b[t];
  return p;
}

double bayes_posterior(int z_t, int z0, int t, const NoiseSchedule& s) {
  // Numerator q(z^t | z^{t-1}=v) q(z^{t-1}=v | z^0) for v in {0,1}.
  const double w1 = one_step_prob(z_t, 1, t, s) * marginal_prob(1, z0, t - 1, s);
  const double w0 = one_step_prob(z_t, 0, t, s) * marginal_prob(0, z0, t - 1, s);
  return w1 / (w0 + w1);
}

ProbVector bayes_posterior_params(BitSpan z_t, BitSpan z0, int t, const NoiseSchedule& s) {
  check_step(t, 2, s, "bayes_posterior_params");
  check_same_length(z_t.size(), z0.size(), "bayes_posterior_params");
  // Only four distinct (z_t, z0) cases exist per step.
  double table[2][2];
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) table[a][c] = clamp_prob(bayes_posterior(a, c, t, s));
  ProbVector p(z_t.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = table[z_t[i]][z0[i]];
  return p;
}

double reverse_mixture(int z_t, double p_z0, int t, const NoiseSchedule& s) {
  return bayes_posterior(z_t, 0, t, s) * (1.0 - p_z0) + bayes_posterior(z_t, 1, t, s) * p_z0;
}

ProbVector reverse_mixture_params(BitSpan z_t, ProbSpan p_z0, int t, const NoiseSchedule& s) {
  check_step(t, 2, s, "reverse_mixture_params");
  check_same_length(z_t.size(), p_z0.size(), "reverse_mixture_params");
  double post[2][2];
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) post[a][c] = bayes_posterior(a, c, t, s);
  ProbVector p(z_t.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = p_z0[i];
    if (!(q >= 0.0 && q <= 1.0))
      throw RangeError("reverse_mixture_params: p_z0 outside [0,1] at bit " + std::to_string(i));
    const int zt = z_t[i];
    p[i] = clamp_prob(post[zt][0] * (1.0 - q) + post[zt][1] * q);
  }
  return p;
}

ProbVector reverse_closed_form_params(BitSpan z_t, ProbSpan p_z0, int t, const NoiseSchedule& s,
                                      ClosedFormIndexing indexing) {
  check_step(t, 2, s, "reverse_closed_form_params");
  check_same_length(z_t.size(), p_z0.size(), "reverse_closed_form_params");
  const double beta = s.beta[t];
  double kf, bf;
  if (indexing == ClosedFormIndexing::AsPrinted) {
    kf = s.k[t];
    bf = 0.5 * s.b[t];
  } else {
    kf = s.k[t - 1];
    bf = s.b[t - 1];
  }
  ProbVector p(z_t.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = z_t[i];
    const double on = ((1.0 - beta) * z + 0.5 * beta) * (kf * p_z0[i] + bf);
    const double off = ((1.0 - beta) * (1.0 - z) + 0.5 * beta) * (kf * (1.0 - p_z0[i]) + bf);
    p[i] = clamp_prob(on / (on + off));
  }
  return p;
}

ProbVector flip_to_z0_probs(BitSpan z_t, ProbSpan flip) {
  check_same_length(z_t.size(), flip.size(), "flip_to_z0_probs");
  ProbVector p(z_t.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = z_t[i] ? 1.0 - flip[i] : flip[i];
  return p;
}

BitVector sample_bits(ProbSpan p, Rng& rng) {
  BitVector z(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) z[i] = rng.uniform() < p[i] ? 1 : 0;
  return z;
}

double prior_kl_terminal(BitSpan z0, const NoiseSchedule& s) {
  if (z0.empty()) return 0.0;
  double total = 0.0;
  for (auto bit : z0) {
    const double p = clamp_prob(s.k[s.T] * bit + s.b[s.T]);
    total += p * std::log(p / 0.5) + (1.0 - p) * std::log((1.0 - p) / 0.5);
  }
  return total / static_cast<double>(z0.size());
}

}  // namespace bld
