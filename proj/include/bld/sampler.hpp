#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bld/denoiser.hpp"
#include "bld/kernel.hpp"
#include "bld/model.hpp"
#include "bld/rng.hpp"
#include "bld/schedule.hpp"

namespace bld {

/// Default sampling temperature.
inline constexpr double kDefaultTemperature = 0.9;

struct SampleRequest {
  std::size_t num_samples = 1;
  double temperature = kDefaultTemperature;
  double guidance = 0.0;
  int cls = kNoClass;
  /// Observed positions (1 = known) and their values; both empty or both D long.
  BitVector mask;
  BitVector observed;
  std::uint64_t seed = 0;
  PredictionTarget target = PredictionTarget::Residual;
  bool trace = false;
  bool parallel = true;
};

struct SampleSnapshot {
  int t = 0;
  BitVector z;
  ProbVector flip;  // model probabilities used to leave step t (empty at t = T entry)
};

/// Snapshots of chain 0 only; at most T+1 entries.
struct SampleTrace {
  std::vector<SampleSnapshot> snapshots;
};

struct SampleResult {
  std::vector<BitVector> samples;
  std::optional<SampleTrace> trace;
};

/// Guided logits: (1+w) cond - w uncond when w > 0 and a class is given,
/// otherwise the plain forward pass for `cls`.
std::vector<double> guided_logits(const DenoiserNet& net, BitSpan z_t, int t, double guidance,
                                  int cls);

/// sigmoid(logit / temperature), clamped.
ProbVector tempered_probs(std::span<const double> logits, double temperature);

/// Model distribution over z^{t-1} (t >= 2) or z^0 (t = 1) given z^t.
ProbVector reverse_step_params(const DenoiserNet& net, BitSpan z_t, int t, const NoiseSchedule& s,
                               double temperature, double guidance, int cls,
                               PredictionTarget target, ProbVector* model_probs = nullptr);

/// One reverse step z^t -> z^{t-1}, t in 2..T.
BitVector denoise_step(const DenoiserNet& net, BitSpan z_t, int t, const NoiseSchedule& s,
                       double temperature, double guidance, int cls, Rng& rng,
                       PredictionTarget target = PredictionTarget::Residual);

/// Runs every chain from B(0.5) at t = T to a z^0 draw. Chain i uses the
/// stream seeded with seed XOR i. Honors the mask when present (see
/// inpaint_chain).
SampleResult sample_chain(const DenoiserNet& net, const SampleRequest& req, const NoiseSchedule& s);

/// sample_chain with known bits re-diffused to q(z^{t-1} | observed) after
/// every step, so the last step pins them to the observed values.
SampleResult inpaint_chain(const DenoiserNet& net, const SampleRequest& req, const NoiseSchedule& s);

}  // namespace bld
