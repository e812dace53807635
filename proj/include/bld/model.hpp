#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bld/denoiser.hpp"
#include "bld/kernel.hpp"
#include "bld/nn.hpp"
#include "bld/schedule.hpp"

namespace bld {

/// What the denoiser's sigmoid output stands for.
enum class PredictionTarget {
  Residual,  // flip probability of z^t xor z^0
  Clean,     // z^0 directly
  Previous,  // z^{t-1} directly, trained on the variational bound alone
};

std::string_view to_string(PredictionTarget target);
PredictionTarget parse_prediction_target(std::string_view name);

BitVector residual_target(BitSpan z_t, BitSpan z0);

/// Mean over bits of -[y log p + (1-y) log(1-p)], p clamped.
double bce_mean(ProbSpan p, BitSpan target);

/// Mean over bits of the residual BCE between predicted flips and z^t xor z^0.
double loss_residual(ProbSpan flip_pred, BitSpan target);

/// KL(B(p) || B(q)) in nats.
double kl_bernoulli(double p, double q);

/// Per-bit variational bound term for residual predictions, mean over bits.
/// t >= 2: KL(q(z^{t-1} | z^t, z^0) || p(z^{t-1} | z^t)) with the model
/// reverse step built from flip_to_z0_probs + reverse_mixture_params.
/// t == 1: -log p(z^0 | z^1) via flip_to_z0_probs.
double loss_vlb(BitSpan z0, BitSpan z_t, ProbSpan flip_pred, int t, const NoiseSchedule& s);

/// Same bound with the model output interpreted under `target`.
double loss_vlb(BitSpan z0, BitSpan z_t, ProbSpan pred, int t, const NoiseSchedule& s,
                PredictionTarget target);

/// Loss of one example and its gradient with respect to the logits.
struct ExampleLoss {
  double main = 0.0;  // BCE against the prediction target (0 for Previous)
  double vlb = 0.0;
  std::vector<double> dlogits;  // d(main + weight * vlb)/dlogits, per example
};

/// Evaluates both loss terms and their logit gradient for one example.
ExampleLoss example_loss(std::span<const double> logits, BitSpan z0, BitSpan z_t, int t,
                         const NoiseSchedule& s, PredictionTarget target, double vlb_weight);

struct DiffusionLossReport {
  std::int64_t step = 0;
  double t_mean = 0.0;
  double loss_total = 0.0;
  double loss_residual = 0.0;
  double loss_vlb = 0.0;
  double lambda = 0.0;
  double lr = 0.0;
};

/// One JSON object per line: {step, t_mean, loss_total, loss_residual, loss_vlb, lr}.
std::string to_jsonl(const DiffusionLossReport& r);

struct TrainConfig {
  double lambda = 0.1;
  double cond_drop_prob = 0.1;
  PredictionTarget target = PredictionTarget::Residual;
  std::uint64_t seed = 0;
  /// Run the per-example loop with OpenMP; off selects the serial reference.
  bool parallel = true;
};

/// Per-example draws for one training step: (t, z^t, class after drop).
struct NoisedExample {
  int t = 0;
  BitVector z_t;
  int cls = kNoClass;
};

/// Draws t ~ U{1..T}, z^t ~ q(z^t | z^0) and the condition-drop coin from a
/// stream keyed by (seed, step, example index).
NoisedExample noise_example(BitSpan z0, int cls, const NoiseSchedule& s, std::uint64_t seed,
                            std::int64_t step, std::size_t index, double cond_drop_prob);

/// Batch gradient (mean over examples) of the combined objective. Examples
/// are split into fixed chunks whose partial sums are added in index order,
/// so the result does not depend on the thread count.
struct BatchGradient {
  std::vector<double> grad;
  double loss_residual = 0.0;
  double loss_vlb = 0.0;
  double t_mean = 0.0;
};

BatchGradient batch_gradient(const DenoiserNet& net, const NoiseSchedule& s,
                             std::span<const BitVector> z0, std::span<const int> classes,
                             const TrainConfig& cfg, std::int64_t step, bool parallel);

/// Owns the denoiser, its optimizer and the schedule; one call per update.
class DiffusionTrainer {
 public:
  DiffusionTrainer(DenoiserNet net, NoiseSchedule schedule, nn::AdamConfig adam, TrainConfig cfg);

  /// Algorithm: per example sample t and z^t, predict flips, form
  /// L_residual + lambda L_vlb, backprop, Adam. Throws NumericError on a
  /// non-finite loss. `classes` may be empty for unconditional training.
  DiffusionLossReport train_step(std::span<const BitVector> z0, std::span<const int> classes = {});

  const DenoiserNet& net() const { return net_; }
  DenoiserNet& net() { return net_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const nn::AdamState& optimizer() const { return adam_; }
  nn::AdamState& optimizer() { return adam_; }
  const TrainConfig& config() const { return cfg_; }
  std::int64_t step() const { return adam_.step; }

  /// Effective lambda: Previous-target training optimizes the bound alone.
  double effective_lambda() const;

 private:
  DenoiserNet net_;
  NoiseSchedule schedule_;
  nn::AdamState adam_;
  TrainConfig cfg_;
};

}  // namespace bld
