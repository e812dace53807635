#include "bld/config.hpp"

#include "bld/error.hpp"

namespace bld {

namespace {

constexpr std::pair<Task, std::string_view> kTaskNames[] = {
    {Task::TrainDiffusion, "train-diffusion"}, {Task::TrainAe, "train-ae"},
    {Task::Sample, "sample"},                  {Task::Encode, "encode"},
    {Task::Decode, "decode"},                  {Task::Verify, "verify"},
    {Task::EvalTv, "eval-tv"},                 {Task::InspectSchedule, "inspect-schedule"},
};

}  // namespace

std::string_view to_string(Task task) {
  for (const auto& [t, name] : kTaskNames)
    if (t == task) return name;
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (const auto& [t, n] : kTaskNames)
    if (n == name) return t;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

RunConfig RunConfig::resolved() const {
  RunConfig r = *this;
  if (!r.lr) r.lr = task == Task::TrainAe ? 5e-4 : 1e-4;
  if (!r.batch_size) r.batch_size = task == Task::TrainAe ? 32 : 64;
  return r;
}

#define BLD_CONFIG_FIELDS(X)                                                                      \
  X(schedule) X(steps) X(input_dim) X(hidden_dim) X(depth) X(num_classes) X(target) X(latent_dim) \
  X(ae_hidden_dim) X(image_side) X(recon_loss) X(warmup_fraction) X(train_steps) X(lambda)        \
  X(cond_drop_prob) X(temperature) X(guidance) X(count) X(cls) X(mask) X(observed) X(seed)        \
  X(log_every) X(data) X(checkpoint) X(output) X(metrics) X(image) X(decoder) X(target_file)

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["task"] = std::string(to_string(cfg.task));
#define X(name) j[#name] = cfg.name;
  BLD_CONFIG_FIELDS(X)
#undef X
  j["lr"] = cfg.lr ? nlohmann::json(*cfg.lr) : nlohmann::json(nullptr);
  j["batch_size"] = cfg.batch_size ? nlohmann::json(*cfg.batch_size) : nlohmann::json(nullptr);
  return j;
}

RunConfig apply_json(RunConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "task") {
        base.task = parse_task(value.get<std::string>());
        continue;
      }
      if (key == "lr") {
        if (value.is_null()) base.lr.reset(); else base.lr = value.get<double>();
        continue;
      }
      if (key == "batch_size") {
        if (value.is_null()) base.batch_size.reset(); else base.batch_size = value.get<int>();
        continue;
      }
      bool known = false;
#define X(name)                                       \
  if (key == #name) {                                 \
    base.name = value.get<decltype(base.name)>();     \
    known = true;                                     \
  }
      BLD_CONFIG_FIELDS(X)
#undef X
      if (!known) throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return base;
}

}  // namespace bld
