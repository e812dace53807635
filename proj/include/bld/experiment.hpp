#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bld/binae.hpp"
#include "bld/data.hpp"
#include "bld/model.hpp"
#include "bld/sampler.hpp"

namespace bld {

/// Training data for the diffusion model: either a fixed pool of latent rows
/// (sampled uniformly with replacement) or a codeword distribution (sampled
/// fresh each step, class id = codeword index).
struct LatentSource {
  std::vector<BitVector> rows;
  std::optional<data::CodewordDistribution> codewords;

  int dim() const;
  /// Draws a batch and, for codeword sources, the matching class ids.
  void draw(std::size_t batch, Rng& rng, std::vector<BitVector>& z0, std::vector<int>& classes) const;
};

struct DiffusionRunOptions {
  ScheduleKind schedule = ScheduleKind::Linear;
  int steps = 16;
  DenoiserConfig model{};
  nn::AdamConfig adam{};
  TrainConfig train{};
  std::int64_t train_steps = 2000;
  std::size_t batch_size = 64;
};

/// Initializes a denoiser from the run seed and trains it on `source`.
/// `on_step` sees every report (may be empty).
DiffusionTrainer train_diffusion(const DiffusionRunOptions& opts, const LatentSource& source,
                                 const std::function<void(const DiffusionLossReport&)>& on_step = {});

struct AutoencoderRunOptions {
  AutoencoderConfig model{};
  nn::AdamConfig adam{5e-4};
  std::int64_t train_steps = 4000;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

BinaryAutoencoder train_autoencoder(const AutoencoderRunOptions& opts,
                                    const std::vector<std::vector<double>>& images,
                                    const std::function<void(const AeLossReport&)>& on_step = {});

/// Binary side x side images: from an IDX file (binarized at 128, then
/// downscaled when larger) or, when `path` is empty, `synthetic_count`
/// synthetic shapes.
data::ImageBatch load_binary_images(const std::string& path, std::size_t side,
                                    std::size_t synthetic_count, Rng& rng);

}  // namespace bld
