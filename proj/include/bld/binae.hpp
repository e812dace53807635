#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bld/kernel.hpp"
#include "bld/nn.hpp"
#include "bld/rng.hpp"

namespace bld {

/// Straight-through surrogate z~ = stop(z) + y - stop(y): the forward value
/// is exactly the binary sample, the backward pass hands the upstream
/// gradient to y unchanged.
struct StraightThrough {
  static std::vector<double> forward(BitSpan z, ProbSpan y);
  static std::vector<double> backward(std::span<const double> upstream);
};

enum class ReconstructionLoss { Bce, Mse };

std::string_view to_string(ReconstructionLoss loss);
ReconstructionLoss parse_reconstruction_loss(std::string_view name);

struct AutoencoderConfig {
  int input_dim = 64;
  int latent_dim = 32;
  int hidden_dim = 128;
  ReconstructionLoss loss = ReconstructionLoss::Bce;
  /// Weight of the single reconstruction term.
  double loss_weight = 1.0;

  bool operator==(const AutoencoderConfig&) const = default;
};

struct AeLossReport {
  std::int64_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // per-pixel agreement at threshold 0.5
  double lr = 0.0;
};

struct Encoding {
  ProbVector y;
  BitVector z;
};

/// Reconstruction loss of decoder logits against x, mean over pixels,
/// together with its gradient with respect to the logits.
double reconstruction_loss(std::span<const double> logits, std::span<const double> x,
                           ReconstructionLoss kind, std::vector<double>* dlogits = nullptr);

/// Encoder: input -> hidden -> latent logits; decoder: latent -> hidden ->
/// pixel logits. Both are two-layer MLPs.
class BinaryAutoencoder {
 public:
  explicit BinaryAutoencoder(AutoencoderConfig cfg = {}, nn::AdamConfig adam = {5e-4});

  void init(Rng& rng);

  /// y = sigmoid(encoder(x)); z ~ Bernoulli(y) drawn from `rng`.
  Encoding encode(std::span<const double> x, Rng& rng) const;
  /// Encoder probabilities only.
  ProbVector encode_probs(std::span<const double> x) const;
  /// sigmoid(decoder(z)).
  std::vector<double> decode(BitSpan z) const;

  /// Gradient of the batch-mean loss through the straight-through surrogate.
  /// `encoder_grad` / `decoder_grad` are overwritten. Draws one latent sample
  /// per example from `rng` in batch order.
  double loss_and_gradient(std::span<const std::vector<double>> batch, Rng& rng,
                           std::vector<double>& encoder_grad, std::vector<double>& decoder_grad,
                           double* accuracy = nullptr) const;

  /// One Adam update on the reconstruction objective. Throws NumericError on
  /// a non-finite loss.
  AeLossReport train_step(std::span<const std::vector<double>> batch, Rng& rng);

  /// Per-pixel round-trip accuracy decode(encode(x)) vs x at threshold 0.5.
  double round_trip_accuracy(std::span<const std::vector<double>> data, Rng& rng) const;

  const AutoencoderConfig& config() const { return cfg_; }
  nn::Mlp& encoder() { return encoder_; }
  const nn::Mlp& encoder() const { return encoder_; }
  nn::Mlp& decoder() { return decoder_; }
  const nn::Mlp& decoder() const { return decoder_; }
  nn::AdamState& encoder_optimizer() { return enc_adam_; }
  const nn::AdamState& encoder_optimizer() const { return enc_adam_; }
  nn::AdamState& decoder_optimizer() { return dec_adam_; }
  const nn::AdamState& decoder_optimizer() const { return dec_adam_; }
  std::int64_t step() const { return enc_adam_.step; }

 private:
  AutoencoderConfig cfg_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  nn::AdamState enc_adam_;
  nn::AdamState dec_adam_;
};

}  // namespace bld
