#include "bld/sampler.hpp"

#include <cmath>

#include "bld/error.hpp"

namespace bld {

std::vector<double> guided_logits(const DenoiserNet& net, BitSpan z_t, int t, double guidance,
                                  int cls) {
  if (guidance < 0.0) throw ConfigError("guidance scale must be non-negative");
  if (guidance > 0.0 && !net.conditional())
    throw ConfigError("guidance needs a denoiser with class embeddings");
  auto cond = net.forward(z_t, t, cls);
  if (guidance == 0.0 || cls == kNoClass) return cond;
  const auto uncond = net.forward(z_t, t, kNoClass);
  for (std::size_t i = 0; i < cond.size(); ++i)
    cond[i] = (1.0 + guidance) * cond[i] - guidance * uncond[i];
  return cond;
}

ProbVector tempered_probs(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  ProbVector p(logits.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = clamp_prob(nn::sigmoid(logits[i] / temperature));
  return p;
}

ProbVector reverse_step_params(const DenoiserNet& net, BitSpan z_t, int t, const NoiseSchedule& s,
                               double temperature, double guidance, int cls,
                               PredictionTarget target, ProbVector* model_probs) {
  if (t < 1 || t > s.T) throw RangeError("reverse step " + std::to_string(t) + " out of range");
  const auto logits = guided_logits(net, z_t, t, guidance, cls);
  ProbVector pred = tempered_probs(logits, temperature);
  if (model_probs) *model_probs = pred;
  if (target == PredictionTarget::Previous) return pred;
  ProbVector p_z0 = target == PredictionTarget::Residual ? flip_to_z0_probs(z_t, pred) : pred;
  if (t == 1) return p_z0;
  return reverse_mixture_params(z_t, p_z0, t, s);
}

BitVector denoise_step(const DenoiserNet& net, BitSpan z_t, int t, const NoiseSchedule& s,
                       double temperature, double guidance, int cls, Rng& rng,
                       PredictionTarget target) {
  if (t < 2) throw RangeError("denoise_step needs t >= 2; the t=1 step draws z^0");
  return sample_bits(reverse_step_params(net, z_t, t, s, temperature, guidance, cls, target), rng);
}

namespace {

void check_request(const DenoiserNet& net, const SampleRequest& req, const NoiseSchedule& s) {
  if (net.config().steps != s.T)
    throw ConfigError("denoiser trained for T=" + std::to_string(net.config().steps) +
                      " but schedule has T=" + std::to_string(s.T));
  if (!(req.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (req.guidance < 0.0) throw ConfigError("guidance scale must be non-negative");
  if (req.guidance > 0.0 && !net.conditional())
    throw ConfigError("guidance needs a denoiser with class embeddings");
  if (req.cls != kNoClass && (req.cls < 0 || req.cls >= net.config().num_classes))
    throw DimensionError("class id " + std::to_string(req.cls) + " not available in this denoiser");
  const auto D = static_cast<std::size_t>(net.config().input_dim);
  if (req.mask.size() != req.observed.size() || (!req.mask.empty() && req.mask.size() != D))
    throw DimensionError("mask and observed values must both be empty or have length " +
                         std::to_string(D));
}

// Overwrite observed positions with draws from q(z^t | observed).
void clamp_observed(BitVector& z, const SampleRequest& req, int t, const NoiseSchedule& s,
                    Rng& rng) {
  for (std::size_t i = 0; i < req.mask.size(); ++i) {
    if (!req.mask[i]) continue;
    const double p = s.k[t] * req.observed[i] + s.b[t];
    z[i] = rng.uniform() < p ? 1 : 0;
  }
}

BitVector run_chain(const DenoiserNet& net, const SampleRequest& req, const NoiseSchedule& s,
                    std::size_t chain, SampleTrace* trace) {
  const auto D = static_cast<std::size_t>(net.config().input_dim);
  Rng rng = chain_stream(req.seed, chain);
  const ProbVector half(D, 0.5);
  BitVector z = sample_bits(half, rng);
  clamp_observed(z, req, s.T, s, rng);
  for (int t = s.T; t >= 1; --t) {
    ProbVector model;
    const ProbVector p = reverse_step_params(net, z, t, s, req.temperature, req.guidance, req.cls,
                                             req.target, trace ? &model : nullptr);
    if (trace) trace->snapshots.push_back({t, z, std::move(model)});
    z = sample_bits(p, rng);
    clamp_observed(z, req, t - 1, s, rng);
  }
  if (trace) trace->snapshots.push_back({0, z, {}});
  return z;
}

}  // namespace

SampleResult sample_chain(const DenoiserNet& net, const SampleRequest& req, const NoiseSchedule& s) {
  check_request(net, req, s);
  SampleResult out;
  out.samples.resize(req.num_samples);
  if (req.trace) out.trace.emplace();
  const auto n = static_cast<std::int64_t>(req.num_samples);
  if (n == 0) return out;
  // Chain 0 runs serially so its trace can be recorded without locking.
  out.samples[0] = run_chain(net, req, s, 0, out.trace ? &*out.trace : nullptr);
  if (req.parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 1; i < n; ++i) out.samples[i] = run_chain(net, req, s, i, nullptr);
  } else {
    for (std::int64_t i = 1; i < n; ++i) out.samples[i] = run_chain(net, req, s, i, nullptr);
  }
  return out;
}

SampleResult inpaint_chain(const DenoiserNet& net, const SampleRequest& req, const NoiseSchedule& s) {
  if (req.mask.empty()) throw DimensionError("inpaint_chain needs a mask");
  return sample_chain(net, req, s);
}

}  // namespace bld
