#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace bld {

enum class Task { TrainDiffusion, TrainAe, Sample, Encode, Decode, Verify, EvalTv, InspectSchedule };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

/// Full description of one CLI run. Every field has a default; a JSON
/// config file may set any of them and command-line flags override both.
struct RunConfig {
  Task task = Task::Verify;

  // schedule
  std::string schedule = "linear";
  int steps = 16;

  // denoiser
  int input_dim = 8;
  int hidden_dim = 128;
  int depth = 2;
  int num_classes = 0;
  std::string target = "residual";

  // autoencoder
  int latent_dim = 32;
  int ae_hidden_dim = 128;
  int image_side = 8;
  std::string recon_loss = "bce";

  // optimizer; lr and batch_size fall back to per-task defaults when unset
  std::optional<double> lr;
  double warmup_fraction = 0.0;
  std::int64_t train_steps = 2000;
  std::optional<int> batch_size;

  // objective
  double lambda = 0.1;
  double cond_drop_prob = 0.1;

  // sampling
  double temperature = 0.9;
  double guidance = 0.0;
  std::int64_t count = 64;
  int cls = -1;
  std::string mask;      // e.g. "11110000": 1 marks an observed position
  std::string observed;  // observed bit values, same length as mask

  std::uint64_t seed = 0;
  std::int64_t log_every = 1;

  // paths
  std::string data;
  std::string checkpoint;
  std::string output;
  std::string metrics;
  std::string image;    // optional PGM output
  std::string decoder;  // autoencoder checkpoint used to render samples
  std::string target_file;

  /// Fills lr / batch_size with the task defaults.
  RunConfig resolved() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Applies every key present in `j` on top of `base`. Unknown keys are a
/// ConfigError.
RunConfig apply_json(RunConfig base, const nlohmann::json& j);

}  // namespace bld
