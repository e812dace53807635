#include "bld/binae.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "bld/error.hpp"

namespace bld {

std::vector<double> StraightThrough::forward(BitSpan z, ProbSpan y) {
  if (z.size() != y.size()) throw DimensionError("straight_through: length mismatch");
  // z + y - y would round away from z; the surrogate's value is z itself.
  return std::vector<double>(z.begin(), z.end());
}

std::vector<double> StraightThrough::backward(std::span<const double> upstream) {
  return std::vector<double>(upstream.begin(), upstream.end());
}

std::string_view to_string(ReconstructionLoss loss) {
  return loss == ReconstructionLoss::Bce ? "bce" : "mse";
}

ReconstructionLoss parse_reconstruction_loss(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bce") return ReconstructionLoss::Bce;
  if (lower == "mse") return ReconstructionLoss::Mse;
  throw ConfigError("unknown reconstruction loss '" + std::string(name) + "'");
}

double reconstruction_loss(std::span<const double> logits, std::span<const double> x,
                           ReconstructionLoss kind, std::vector<double>* dlogits) {
  const std::size_t n = logits.size();
  if (x.size() != n) throw DimensionError("reconstruction_loss: length mismatch");
  if (dlogits) dlogits->assign(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = logits[i];
    const double s = nn::sigmoid(a);
    if (kind == ReconstructionLoss::Bce) {
      // Logit-space BCE: max(a,0) - a x + log(1 + e^{-|a|}).
      total += std::max(a, 0.0) - a * x[i] + std::log1p(std::exp(-std::abs(a)));
      if (dlogits) (*dlogits)[i] = (s - x[i]) * inv_n;
    } else {
      const double d = s - x[i];
      total += d * d;
      if (dlogits) (*dlogits)[i] = 2.0 * d * s * (1.0 - s) * inv_n;
    }
  }
  return total * inv_n;
}

BinaryAutoencoder::BinaryAutoencoder(AutoencoderConfig cfg, nn::AdamConfig adam)
    : cfg_(cfg),
      encoder_({static_cast<std::size_t>(cfg.input_dim), static_cast<std::size_t>(cfg.hidden_dim),
                static_cast<std::size_t>(cfg.latent_dim)}),
      decoder_({static_cast<std::size_t>(cfg.latent_dim), static_cast<std::size_t>(cfg.hidden_dim),
                static_cast<std::size_t>(cfg.input_dim)}),
      enc_adam_(encoder_.param_count(), adam),
      dec_adam_(decoder_.param_count(), adam) {
  if (cfg.input_dim < 1 || cfg.latent_dim < 1 || cfg.hidden_dim < 1)
    throw ConfigError("invalid autoencoder dimensions");
  if (cfg.loss_weight < 0.0) throw ConfigError("loss weight must be non-negative");
}

void BinaryAutoencoder::init(Rng& rng) {
  encoder_.init(rng);
  decoder_.init(rng);
}

ProbVector BinaryAutoencoder::encode_probs(std::span<const double> x) const {
  const auto logits = encoder_.forward(x);
  ProbVector y(logits.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = nn::sigmoid(logits[i]);
  return y;
}

Encoding BinaryAutoencoder::encode(std::span<const double> x, Rng& rng) const {
  Encoding e;
  e.y = encode_probs(x);
  e.z = sample_bits(e.y, rng);
  return e;
}

std::vector<double> BinaryAutoencoder::decode(BitSpan z) const {
  if (z.size() != static_cast<std::size_t>(cfg_.latent_dim))
    throw DimensionError("decode: latent has " + std::to_string(z.size()) + " bits, expected " +
                         std::to_string(cfg_.latent_dim));
  const std::vector<double> zin(z.begin(), z.end());
  auto out = decoder_.forward(zin);
  for (auto& v : out) v = nn::sigmoid(v);
  return out;
}

double BinaryAutoencoder::loss_and_gradient(std::span<const std::vector<double>> batch, Rng& rng,
                                            std::vector<double>& encoder_grad,
                                            std::vector<double>& decoder_grad,
                                            double* accuracy) const {
  if (batch.empty()) throw ValidationError("autoencoder batch is empty");
  encoder_grad.assign(encoder_.param_count(), 0.0);
  decoder_grad.assign(decoder_.param_count(), 0.0);
  const double scale = cfg_.loss_weight / static_cast<double>(batch.size());
  double total = 0.0;
  std::size_t correct = 0, pixels = 0;
  nn::Mlp::Cache enc_cache, dec_cache;
  std::vector<double> dlogits;
  for (const auto& x : batch) {
    const auto enc_logits = encoder_.forward(x, &enc_cache);
    ProbVector y(enc_logits.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = nn::sigmoid(enc_logits[i]);
    const BitVector z = sample_bits(y, rng);
    const auto z_tilde = StraightThrough::forward(z, y);
    const auto dec_logits = decoder_.forward(z_tilde, &dec_cache);
    total += reconstruction_loss(dec_logits, x, cfg_.loss, &dlogits);
    for (std::size_t i = 0; i < x.size(); ++i) {
      correct += (dec_logits[i] >= 0.0) == (x[i] >= 0.5);
      dlogits[i] *= scale;
    }
    pixels += x.size();
    const auto dz = decoder_.backward(dec_cache, dlogits, decoder_grad);
    auto dy = StraightThrough::backward(dz);
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] *= y[i] * (1.0 - y[i]);
    encoder_.backward(enc_cache, dy, encoder_grad);
  }
  if (accuracy) *accuracy = static_cast<double>(correct) / static_cast<double>(pixels);
  return cfg_.loss_weight * total / static_cast<double>(batch.size());
}

AeLossReport BinaryAutoencoder::train_step(std::span<const std::vector<double>> batch, Rng& rng) {
  std::vector<double> ge, gd;
  AeLossReport r;
  r.loss = loss_and_gradient(batch, rng, ge, gd, &r.accuracy);
  if (!std::isfinite(r.loss))
    throw NumericError("non-finite autoencoder loss at step " + std::to_string(step() + 1));
  r.lr = nn::adam_step(encoder_.params(), ge, enc_adam_);
  nn::adam_step(decoder_.params(), gd, dec_adam_);
  r.step = step();
  return r;
}

double BinaryAutoencoder::round_trip_accuracy(std::span<const std::vector<double>> data,
                                              Rng& rng) const {
  std::size_t correct = 0, pixels = 0;
  for (const auto& x : data) {
    const auto xhat = decode(encode(x, rng).z);
    for (std::size_t i = 0; i < x.size(); ++i) correct += (xhat[i] >= 0.5) == (x[i] >= 0.5);
    pixels += x.size();
  }
  return pixels ? static_cast<double>(correct) / static_cast<double>(pixels) : 0.0;
}

}  // namespace bld
