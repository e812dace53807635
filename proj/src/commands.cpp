#include "bld/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include "bld/checkpoint.hpp"
#include "bld/error.hpp"
#include "bld/experiment.hpp"
#include "bld/formats.hpp"
#include "bld/oracle.hpp"
#include "bld/verify.hpp"

namespace bld {

using nlohmann::json;

namespace {

/// Metrics go to the configured file when set, otherwise to `fallback`.
class MetricsSink {
 public:
  MetricsSink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) throw IoError("cannot open metrics file " + path);
      os_ = file_.get();
    }
  }
  void line(const std::string& s) { *os_ << s << '\n'; }
  void line(const json& j) { line(j.dump()); }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

BitVector parse_bit_string(const std::string& s, int dim, const char* what) {
  if (s.size() != static_cast<std::size_t>(dim))
    throw DimensionError(std::string(what) + " has " + std::to_string(s.size()) + " positions, expected " +
                         std::to_string(dim));
  BitVector bits(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw ConfigError(std::string(what) + " must contain only 0 and 1");
    bits[i] = s[i] == '1';
  }
  return bits;
}

bool log_this(const RunConfig& cfg, std::int64_t step) {
  return cfg.log_every > 0 && (step % cfg.log_every == 0 || step == cfg.train_steps);
}

std::size_t square_side(std::size_t n) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  return side * side == n ? side : 0;
}

void write_sample_images(const std::vector<BitVector>& samples, const RunConfig& cfg) {
  std::vector<formats::Image> tiles;
  const std::size_t shown = std::min<std::size_t>(samples.size(), 64);
  if (!cfg.decoder.empty()) {
    const auto ae = checkpoint::autoencoder_from_json(checkpoint::load(cfg.decoder)).ae;
    const std::size_t side = square_side(static_cast<std::size_t>(ae.config().input_dim));
    if (side == 0) throw DimensionError("decoder output is not a square image");
    for (std::size_t i = 0; i < shown; ++i)
      tiles.push_back(formats::reals_to_image(ae.decode(samples[i]), side, side));
  } else {
    const std::size_t side = samples.empty() ? 0 : square_side(samples.front().size());
    if (side == 0) throw DimensionError("samples are not image-shaped; pass a decoder checkpoint");
    for (std::size_t i = 0; i < shown; ++i) tiles.push_back(formats::bits_to_image(samples[i], side, side));
  }
  const auto columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tiles.size()))));
  formats::write_pgm(formats::tile(tiles, columns), cfg.image);
}

int train_diffusion_task(const RunConfig& cfg, MetricsSink& metrics) {
  DiffusionRunOptions opts;
  opts.schedule = parse_schedule_kind(cfg.schedule);
  opts.steps = cfg.steps;
  opts.model = {cfg.input_dim, cfg.hidden_dim, cfg.depth, cfg.steps, cfg.num_classes};
  opts.adam.lr = *cfg.lr;
  opts.adam.warmup_fraction = cfg.warmup_fraction;
  opts.train = {cfg.lambda, cfg.cond_drop_prob, parse_prediction_target(cfg.target), cfg.seed, true};
  opts.train_steps = cfg.train_steps;
  if (*cfg.batch_size < 1) throw ConfigError("batch_size must be positive");
  opts.batch_size = static_cast<std::size_t>(*cfg.batch_size);

  LatentSource source;
  if (cfg.data.empty()) {
    source.codewords = data::default_codewords();
  } else {
    std::uint32_t dim = 0;
    source.rows = formats::read_blds(cfg.data, &dim);
    if (source.rows.empty()) throw ValidationError("latent file " + cfg.data + " holds no rows");
  }
  auto trainer = train_diffusion(opts, source, [&](const DiffusionLossReport& r) {
    if (log_this(cfg, r.step)) metrics.line(to_jsonl(r));
  });
  if (!cfg.output.empty()) {
    checkpoint::DiffusionCheckpoint ckpt{trainer.net(), trainer.schedule(), trainer.optimizer(),
                                         trainer.config().target, to_json(cfg), cfg.seed, trainer.step()};
    checkpoint::save(checkpoint::to_json(ckpt), cfg.output);
  }
  return 0;
}

int train_ae_task(const RunConfig& cfg, MetricsSink& metrics) {
  Rng data_rng(mix_seed(cfg.seed ^ 0xda7aULL));
  const auto side = static_cast<std::size_t>(cfg.image_side);
  const auto images = data::to_real(load_binary_images(cfg.data, side, 4096, data_rng));
  AutoencoderRunOptions opts;
  opts.model = {static_cast<int>(side * side), cfg.latent_dim, cfg.ae_hidden_dim,
                parse_reconstruction_loss(cfg.recon_loss), 1.0};
  opts.adam.lr = *cfg.lr;
  opts.adam.warmup_fraction = cfg.warmup_fraction;
  opts.train_steps = cfg.train_steps;
  if (*cfg.batch_size < 1) throw ConfigError("batch_size must be positive");
  opts.batch_size = static_cast<std::size_t>(*cfg.batch_size);
  opts.seed = cfg.seed;
  auto ae = train_autoencoder(opts, images, [&](const AeLossReport& r) {
    if (log_this(cfg, r.step))
      metrics.line(json{{"step", r.step}, {"loss", r.loss}, {"accuracy", r.accuracy}, {"lr", r.lr}});
  });
  Rng eval_rng(mix_seed(cfg.seed ^ 0xe7a1ULL));
  metrics.line(json{{"round_trip_accuracy", ae.round_trip_accuracy(images, eval_rng)}});
  if (!cfg.output.empty()) {
    checkpoint::AutoencoderCheckpoint ckpt{ae, to_json(cfg), cfg.seed, ae.step()};
    checkpoint::save(checkpoint::to_json(ckpt), cfg.output);
  }
  return 0;
}

int sample_task(const RunConfig& cfg, MetricsSink& metrics) {
  if (cfg.checkpoint.empty()) throw ConfigError("sample needs --checkpoint");
  const auto ckpt = checkpoint::diffusion_from_json(checkpoint::load(cfg.checkpoint));
  if (cfg.count < 0) throw ConfigError("count must be non-negative");
  SampleRequest req;
  req.num_samples = static_cast<std::size_t>(cfg.count);
  req.temperature = cfg.temperature;
  req.guidance = cfg.guidance;
  req.cls = cfg.cls;
  req.seed = cfg.seed;
  req.target = ckpt.target;
  const int dim = ckpt.net.config().input_dim;
  if (!cfg.mask.empty() || !cfg.observed.empty()) {
    req.mask = parse_bit_string(cfg.mask, dim, "mask");
    req.observed = parse_bit_string(cfg.observed, dim, "observed");
  }
  const auto result = req.mask.empty() ? sample_chain(ckpt.net, req, ckpt.schedule)
                                       : inpaint_chain(ckpt.net, req, ckpt.schedule);
  if (!cfg.output.empty())
    formats::write_blds(cfg.output, result.samples, static_cast<std::uint32_t>(dim));
  if (!cfg.image.empty()) write_sample_images(result.samples, cfg);
  metrics.line(json{{"samples", result.samples.size()},
                    {"dim", dim},
                    {"steps", ckpt.schedule.T},
                    {"temperature", cfg.temperature},
                    {"guidance", cfg.guidance}});
  return 0;
}

int encode_task(const RunConfig& cfg, MetricsSink& metrics) {
  if (cfg.checkpoint.empty()) throw ConfigError("encode needs --checkpoint");
  if (cfg.output.empty()) throw ConfigError("encode needs --output");
  const auto ae = checkpoint::autoencoder_from_json(checkpoint::load(cfg.checkpoint)).ae;
  const std::size_t side = square_side(static_cast<std::size_t>(ae.config().input_dim));
  Rng data_rng(mix_seed(cfg.seed ^ 0xda7aULL));
  const auto images = data::to_real(
      load_binary_images(cfg.data, side, static_cast<std::size_t>(std::max<std::int64_t>(cfg.count, 0)), data_rng));
  Rng rng(mix_seed(cfg.seed));
  std::vector<BitVector> latents;
  latents.reserve(images.size());
  for (const auto& x : images) latents.push_back(ae.encode(x, rng).z);
  formats::write_blds(cfg.output, latents, static_cast<std::uint32_t>(ae.config().latent_dim));
  metrics.line(json{{"encoded", latents.size()}, {"latent_dim", ae.config().latent_dim}});
  return 0;
}

int decode_task(const RunConfig& cfg, MetricsSink& metrics) {
  if (cfg.checkpoint.empty() || cfg.data.empty() || cfg.output.empty())
    throw ConfigError("decode needs --checkpoint, --data (BLDS) and --output (PGM)");
  const auto ae = checkpoint::autoencoder_from_json(checkpoint::load(cfg.checkpoint)).ae;
  std::uint32_t dim = 0;
  const auto latents = formats::read_blds(cfg.data, &dim);
  if (dim != static_cast<std::uint32_t>(ae.config().latent_dim))
    throw DimensionError("latent file has D=" + std::to_string(dim) + " but the autoencoder expects " +
                         std::to_string(ae.config().latent_dim));
  if (latents.empty()) throw ValidationError("latent file holds no rows");
  const std::size_t side = square_side(static_cast<std::size_t>(ae.config().input_dim));
  std::vector<formats::Image> tiles;
  for (const auto& z : latents) tiles.push_back(formats::reals_to_image(ae.decode(z), side, side));
  const auto columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tiles.size()))));
  formats::write_pgm(formats::tile(tiles, columns), cfg.output);
  metrics.line(json{{"decoded", latents.size()}});
  return 0;
}

int eval_tv_task(const RunConfig& cfg, MetricsSink& metrics) {
  if (cfg.data.empty()) throw ConfigError("eval-tv needs --data (BLDS samples)");
  std::uint32_t dim = 0;
  const auto samples = formats::read_blds(cfg.data, &dim);
  oracle::ExplicitDistribution target;
  if (cfg.target_file.empty()) {
    target = data::default_codewords().as_explicit();
  } else {
    std::uint32_t tdim = 0;
    const auto rows = formats::read_blds(cfg.target_file, &tdim);
    target = oracle::empirical(rows, static_cast<int>(tdim));
  }
  if (static_cast<int>(dim) != target.d)
    throw DimensionError("sample D=" + std::to_string(dim) + " differs from target d=" + std::to_string(target.d));
  metrics.line(json{{"tv", oracle::tv_distance(samples, target)},
                    {"outside_mass", oracle::mass_outside_support(samples, target)},
                    {"n", samples.size()}});
  return 0;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out) {
  const RunConfig cfg = config.resolved();
  switch (cfg.task) {
    case Task::Verify: {
      const auto rows = run_oracle_suite(cfg.seed);
      out << format_table(rows);
      for (const auto& r : rows)
        if (!r.passed) return 1;
      return 0;
    }
    case Task::InspectSchedule: {
      const auto csv = schedule_csv(build_schedule(parse_schedule_kind(cfg.schedule), cfg.steps));
      if (cfg.output.empty()) out << csv;
      else formats::write_file(cfg.output, csv);
      return 0;
    }
    default: break;
  }
  MetricsSink metrics(cfg.metrics, out);
  metrics.line(json{{"config", to_json(cfg)}});
  switch (cfg.task) {
    case Task::TrainDiffusion: return train_diffusion_task(cfg, metrics);
    case Task::TrainAe: return train_ae_task(cfg, metrics);
    case Task::Sample: return sample_task(cfg, metrics);
    case Task::Encode: return encode_task(cfg, metrics);
    case Task::Decode: return decode_task(cfg, metrics);
    case Task::EvalTv: return eval_tv_task(cfg, metrics);
    default: throw ConfigError("unhandled task");
  }
}

}  // namespace bld
