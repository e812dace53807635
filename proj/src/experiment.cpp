#include "bld/experiment.hpp"

#include <algorithm>

#include "bld/error.hpp"

namespace bld {

int LatentSource::dim() const {
  if (codewords) return codewords->d;
  if (rows.empty()) throw ValidationError("latent source is empty");
  return static_cast<int>(rows.front().size());
}

void LatentSource::draw(std::size_t batch, Rng& rng, std::vector<BitVector>& z0,
                        std::vector<int>& classes) const {
  z0.clear();
  classes.clear();
  if (codewords) {
    const auto& cw = *codewords;
    for (std::size_t i = 0; i < batch; ++i) {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t k = 0;
      while (k + 1 < cw.probs.size() && u >= (acc += cw.probs[k])) ++k;
      z0.push_back(cw.codewords[k]);
      classes.push_back(static_cast<int>(k));
    }
    return;
  }
  if (rows.empty()) throw ValidationError("latent source is empty");
  for (std::size_t i = 0; i < batch; ++i)
    z0.push_back(rows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(rows.size()) - 1))]);
}

namespace {
// Stream index reserved for batch draws; per-example noise uses 0..B-1.
constexpr std::uint64_t kBatchStream = ~std::uint64_t{0};
}  // namespace

DiffusionTrainer train_diffusion(const DiffusionRunOptions& opts, const LatentSource& source,
                                 const std::function<void(const DiffusionLossReport&)>& on_step) {
  if (source.dim() != opts.model.input_dim)
    throw DimensionError("data has " + std::to_string(source.dim()) + " bits but the denoiser expects " +
                         std::to_string(opts.model.input_dim));
  if (opts.batch_size == 0) throw ConfigError("batch size must be positive");
  DenoiserConfig mc = opts.model;
  mc.steps = opts.steps;
  DenoiserNet net(mc);
  Rng init = Rng(mix_seed(opts.train.seed));
  net.init(init);
  nn::AdamConfig adam = opts.adam;
  adam.total_steps = opts.train_steps;
  DiffusionTrainer trainer(std::move(net), build_schedule(opts.schedule, opts.steps), adam, opts.train);
  const bool use_classes = mc.num_classes > 0;
  if (use_classes && !source.codewords)
    throw ConfigError("class-conditional training needs a labelled (codeword) source");
  std::vector<BitVector> z0;
  std::vector<int> classes;
  for (std::int64_t step = 1; step <= opts.train_steps; ++step) {
    Rng rng = keyed_stream(opts.train.seed, static_cast<std::uint64_t>(step), kBatchStream);
    source.draw(opts.batch_size, rng, z0, classes);
    if (use_classes)
      for (auto c : classes)
        if (c >= mc.num_classes) throw ConfigError("class id exceeds the denoiser's class count");
    const auto report = trainer.train_step(z0, use_classes ? std::span<const int>(classes) : std::span<const int>());
    if (on_step) on_step(report);
  }
  return trainer;
}

BinaryAutoencoder train_autoencoder(const AutoencoderRunOptions& opts,
                                    const std::vector<std::vector<double>>& images,
                                    const std::function<void(const AeLossReport&)>& on_step) {
  if (images.empty()) throw ValidationError("no training images");
  if (images.front().size() != static_cast<std::size_t>(opts.model.input_dim))
    throw DimensionError("image size does not match the autoencoder input");
  nn::AdamConfig adam = opts.adam;
  adam.total_steps = opts.train_steps;
  BinaryAutoencoder ae(opts.model, adam);
  Rng init(mix_seed(opts.seed));
  ae.init(init);
  std::vector<std::vector<double>> batch;
  for (std::int64_t step = 1; step <= opts.train_steps; ++step) {
    Rng rng = keyed_stream(opts.seed, static_cast<std::uint64_t>(step), kBatchStream);
    batch.clear();
    for (std::size_t i = 0; i < opts.batch_size; ++i)
      batch.push_back(images[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(images.size()) - 1))]);
    const auto report = ae.train_step(batch, rng);
    if (on_step) on_step(report);
  }
  return ae;
}

data::ImageBatch load_binary_images(const std::string& path, std::size_t side,
                                    std::size_t synthetic_count, Rng& rng) {
  if (path.empty()) return data::make_shapes_dataset(synthetic_count, rng, side);
  const auto gray = data::images_from_idx(data::read_idx_file(path));
  data::ImageBatch binary{gray.width, gray.height, {}};
  for (auto& bits : data::binarize(gray)) binary.images.emplace_back(bits.begin(), bits.end());
  if (binary.width == side && binary.height == side) return binary;
  const std::size_t factor = std::min(binary.width, binary.height) / side;
  if (factor == 0)
    throw DimensionError("cannot downscale " + std::to_string(binary.width) + "x" +
                         std::to_string(binary.height) + " images to " + std::to_string(side));
  return data::downscale(binary, factor, side);
}

}  // namespace bld
