// Command-line front end: bld <task> [--config file.json] [flags]
//
// Precedence for every setting: flag > config file > built-in default.
// BLD_SEED supplies the seed when neither a flag nor the file sets one.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "bld/commands.hpp"
#include "bld/config.hpp"
#include "bld/error.hpp"

namespace {

struct Overrides {
  std::string config_file;
  std::optional<std::string> schedule, target, recon_loss, mask, observed, data, checkpoint, output,
      metrics, image, decoder, target_file;
  std::optional<int> steps, input_dim, hidden_dim, depth, num_classes, latent_dim, ae_hidden_dim,
      image_side, batch_size, cls;
  std::optional<double> lr, warmup_fraction, lambda, cond_drop_prob, temperature, guidance;
  std::optional<std::int64_t> train_steps, count, log_every;
  std::optional<std::uint64_t> seed;
};

void add_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "JSON config file");
  app->add_option("--schedule", o.schedule, "noise schedule: linear | cosine");
  app->add_option("--steps,-T", o.steps, "diffusion steps T");
  app->add_option("--dim,--input-dim", o.input_dim, "latent dimension D");
  app->add_option("--hidden", o.hidden_dim, "denoiser hidden width H");
  app->add_option("--depth", o.depth, "denoiser residual blocks L");
  app->add_option("--classes", o.num_classes, "number of classes (0 = unconditional)");
  app->add_option("--target", o.target, "prediction target: residual | z0 | zprev");
  app->add_option("--latent-dim", o.latent_dim, "autoencoder latent bits");
  app->add_option("--ae-hidden", o.ae_hidden_dim, "autoencoder hidden width");
  app->add_option("--image-side", o.image_side, "autoencoder image side length");
  app->add_option("--recon-loss", o.recon_loss, "autoencoder loss: bce | mse");
  app->add_option("--lr", o.lr, "learning rate");
  app->add_option("--warmup", o.warmup_fraction, "linear warmup as a fraction of training steps");
  app->add_option("--train-steps", o.train_steps, "optimizer steps");
  app->add_option("--batch", o.batch_size, "batch size");
  app->add_option("--lambda", o.lambda, "weight of the variational bound term");
  app->add_option("--cond-drop", o.cond_drop_prob, "condition dropout probability");
  app->add_option("--temperature,--tau", o.temperature, "sampling temperature");
  app->add_option("--guidance,--omega", o.guidance, "classifier-free guidance scale");
  app->add_option("--count,-n", o.count, "number of samples / synthetic images");
  app->add_option("--class", o.cls, "class id for conditional sampling");
  app->add_option("--mask", o.mask, "observed positions as a 0/1 string");
  app->add_option("--observed", o.observed, "observed bit values as a 0/1 string");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--log-every", o.log_every, "metrics interval in steps");
  app->add_option("--data", o.data, "input data (IDX images or BLDS latents)");
  app->add_option("--checkpoint", o.checkpoint, "input checkpoint");
  app->add_option("--output,-o", o.output, "output path");
  app->add_option("--metrics", o.metrics, "metrics JSONL path (default stdout)");
  app->add_option("--image", o.image, "write samples as a PGM grid");
  app->add_option("--decoder", o.decoder, "autoencoder checkpoint for rendering samples");
  app->add_option("--target-file", o.target_file, "BLDS file defining the eval-tv target");
}

template <class T, class U>
void set_if(const std::optional<T>& v, U& field) {
  if (v) field = *v;
}

bld::RunConfig merge(bld::Task task, const Overrides& o) {
  bld::RunConfig cfg;
  bool seed_from_file = false;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw bld::IoError("cannot open config file " + o.config_file);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw bld::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    seed_from_file = j.is_object() && j.contains("seed");
    cfg = bld::apply_json(cfg, j);
  }
  cfg.task = task;
  set_if(o.schedule, cfg.schedule);
  set_if(o.steps, cfg.steps);
  set_if(o.input_dim, cfg.input_dim);
  set_if(o.hidden_dim, cfg.hidden_dim);
  set_if(o.depth, cfg.depth);
  set_if(o.num_classes, cfg.num_classes);
  set_if(o.target, cfg.target);
  set_if(o.latent_dim, cfg.latent_dim);
  set_if(o.ae_hidden_dim, cfg.ae_hidden_dim);
  set_if(o.image_side, cfg.image_side);
  set_if(o.recon_loss, cfg.recon_loss);
  if (o.lr) cfg.lr = *o.lr;
  set_if(o.warmup_fraction, cfg.warmup_fraction);
  set_if(o.train_steps, cfg.train_steps);
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  set_if(o.lambda, cfg.lambda);
  set_if(o.cond_drop_prob, cfg.cond_drop_prob);
  set_if(o.temperature, cfg.temperature);
  set_if(o.guidance, cfg.guidance);
  set_if(o.count, cfg.count);
  set_if(o.cls, cfg.cls);
  set_if(o.mask, cfg.mask);
  set_if(o.observed, cfg.observed);
  set_if(o.log_every, cfg.log_every);
  set_if(o.data, cfg.data);
  set_if(o.checkpoint, cfg.checkpoint);
  set_if(o.output, cfg.output);
  set_if(o.metrics, cfg.metrics);
  set_if(o.image, cfg.image);
  set_if(o.decoder, cfg.decoder);
  set_if(o.target_file, cfg.target_file);
  if (o.seed) {
    cfg.seed = *o.seed;
  } else if (!seed_from_file) {
    if (const char* env = std::getenv("BLD_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw bld::ConfigError("BLD_SEED is not an unsigned integer");
      }
    }
  }
  return cfg;
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bernoulli latent diffusion toolkit"};
  app.require_subcommand(1);
  Overrides o;
  const std::pair<const char*, const char*> tasks[] = {
      {"train-diffusion", "train a denoiser on codewords or a BLDS latent file"},
      {"train-ae", "train the binary autoencoder on images"},
      {"sample", "draw samples, optionally guided, inpainted or decoded to PGM"},
      {"encode", "encode images to a BLDS latent file"},
      {"decode", "decode a BLDS latent file to a PGM grid"},
      {"verify", "check kernels against the enumeration oracle"},
      {"eval-tv", "total variation of a BLDS file against the codeword target"},
      {"inspect-schedule", "print k, b and beta per step as CSV"}};
  for (const auto& [name, help] : tasks) add_options(app.add_subcommand(name, help), o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    const auto* sub = app.get_subcommands().front();
    const bld::RunConfig cfg = merge(bld::parse_task(sub->get_name()), o);
    return bld::run(cfg, std::cout);
  } catch (const bld::Error& e) {
    report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
  }
  return 2;
}
