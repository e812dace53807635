#include "bld/checkpoint.hpp"

#include "bld/error.hpp"
#include "bld/formats.hpp"

namespace bld::checkpoint {

using nlohmann::json;

json tensors_to_json(const nn::ParamLayout& layout, std::span<const double> values) {
  json out = json::object();
  for (const auto& s : layout.slots()) {
    const auto v = values.subspan(s.offset, s.size());
    if (s.cols == 1) {
      out[s.name] = std::vector<double>(v.begin(), v.end());
      continue;
    }
    json rows = json::array();
    for (std::size_t r = 0; r < s.rows; ++r)
      rows.push_back(std::vector<double>(v.begin() + r * s.cols, v.begin() + (r + 1) * s.cols));
    out[s.name] = std::move(rows);
  }
  return out;
}

void tensors_from_json(const json& j, const nn::ParamLayout& layout, std::span<double> values) {
  for (const auto& s : layout.slots()) {
    if (!j.contains(s.name)) throw FormatError("checkpoint is missing tensor '" + s.name + "'");
    const json& t = j.at(s.name);
    auto v = values.subspan(s.offset, s.size());
    if (s.cols == 1) {
      if (!t.is_array() || t.size() != s.rows)
        throw DimensionError("tensor '" + s.name + "' has the wrong length");
      for (std::size_t r = 0; r < s.rows; ++r) v[r] = t[r].get<double>();
      continue;
    }
    if (!t.is_array() || t.size() != s.rows)
      throw DimensionError("tensor '" + s.name + "' has the wrong row count");
    for (std::size_t r = 0; r < s.rows; ++r) {
      if (!t[r].is_array() || t[r].size() != s.cols)
        throw DimensionError("tensor '" + s.name + "' has the wrong column count");
      for (std::size_t c = 0; c < s.cols; ++c) v[r * s.cols + c] = t[r][c].get<double>();
    }
  }
}

namespace {

json adam_to_json(const nn::AdamState& st, const nn::ParamLayout& layout) {
  return {{"lr", st.config.lr},
          {"beta1", st.config.beta1},
          {"beta2", st.config.beta2},
          {"eps", st.config.eps},
          {"warmup_fraction", st.config.warmup_fraction},
          {"total_steps", st.config.total_steps},
          {"step", st.step},
          {"m", tensors_to_json(layout, st.m)},
          {"v", tensors_to_json(layout, st.v)}};
}

nn::AdamState adam_from_json(const json& j, const nn::ParamLayout& layout) {
  nn::AdamConfig cfg;
  cfg.lr = j.at("lr").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.eps = j.at("eps").get<double>();
  cfg.warmup_fraction = j.at("warmup_fraction").get<double>();
  cfg.total_steps = j.at("total_steps").get<std::int64_t>();
  nn::AdamState st(layout.total(), cfg);
  st.step = j.at("step").get<std::int64_t>();
  tensors_from_json(j.at("m"), layout, st.m);
  tensors_from_json(j.at("v"), layout, st.v);
  return st;
}

void check_format(const json& j, const char* kind) {
  if (!j.is_object() || j.value("format", "") != kFormat)
    throw FormatError("not a BLD1 checkpoint");
  if (j.value("kind", "") != kind)
    throw FormatError(std::string("checkpoint is not a ") + kind + " checkpoint");
}

}  // namespace

json to_json(const DiffusionCheckpoint& c) {
  const auto& mc = c.net.config();
  json schedule = {{"kind", std::string(to_string(c.schedule.kind))}, {"T", c.schedule.T}};
  if (c.schedule.kind == ScheduleKind::Custom) schedule["k"] = c.schedule.k;
  return {{"format", kFormat},
          {"kind", "diffusion"},
          {"config", c.config},
          {"model",
           {{"input_dim", mc.input_dim},
            {"hidden_dim", mc.hidden_dim},
            {"depth", mc.depth},
            {"steps", mc.steps},
            {"num_classes", mc.num_classes},
            {"target", std::string(to_string(c.target))}}},
          {"schedule", schedule},
          {"parameters", tensors_to_json(c.net.layout(), c.net.params())},
          {"optimizer", adam_to_json(c.optimizer, c.net.layout())},
          {"seed", c.seed},
          {"step", c.step}};
}

DiffusionCheckpoint diffusion_from_json(const json& j) {
  check_format(j, "diffusion");
  try {
    const json& m = j.at("model");
    DenoiserConfig mc{m.at("input_dim").get<int>(), m.at("hidden_dim").get<int>(),
                      m.at("depth").get<int>(), m.at("steps").get<int>(),
                      m.at("num_classes").get<int>()};
    const json& sj = j.at("schedule");
    const ScheduleKind kind = parse_schedule_kind(sj.at("kind").get<std::string>());
    NoiseSchedule schedule = kind == ScheduleKind::Custom
                                 ? build_custom_schedule(sj.at("k").get<std::vector<double>>())
                                 : build_schedule(kind, sj.at("T").get<int>());
    if (schedule.T != mc.steps)
      throw DimensionError("checkpoint schedule T does not match the denoiser's step count");
    DiffusionCheckpoint c{DenoiserNet(mc), std::move(schedule), {}, PredictionTarget::Residual,
                          j.at("config"), j.at("seed").get<std::uint64_t>(),
                          j.at("step").get<std::int64_t>()};
    c.target = parse_prediction_target(m.at("target").get<std::string>());
    tensors_from_json(j.at("parameters"), c.net.layout(), c.net.params());
    c.optimizer = adam_from_json(j.at("optimizer"), c.net.layout());
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed diffusion checkpoint: ") + e.what());
  }
}

json to_json(const AutoencoderCheckpoint& c) {
  const auto& ac = c.ae.config();
  return {{"format", kFormat},
          {"kind", "autoencoder"},
          {"config", c.config},
          {"model",
           {{"input_dim", ac.input_dim},
            {"latent_dim", ac.latent_dim},
            {"hidden_dim", ac.hidden_dim},
            {"loss", std::string(to_string(ac.loss))},
            {"loss_weight", ac.loss_weight}}},
          {"parameters",
           {{"encoder", tensors_to_json(c.ae.encoder().layout(), c.ae.encoder().params())},
            {"decoder", tensors_to_json(c.ae.decoder().layout(), c.ae.decoder().params())}}},
          {"optimizer",
           {{"encoder", adam_to_json(c.ae.encoder_optimizer(), c.ae.encoder().layout())},
            {"decoder", adam_to_json(c.ae.decoder_optimizer(), c.ae.decoder().layout())}}},
          {"seed", c.seed},
          {"step", c.step}};
}

AutoencoderCheckpoint autoencoder_from_json(const json& j) {
  check_format(j, "autoencoder");
  try {
    const json& m = j.at("model");
    AutoencoderConfig ac;
    ac.input_dim = m.at("input_dim").get<int>();
    ac.latent_dim = m.at("latent_dim").get<int>();
    ac.hidden_dim = m.at("hidden_dim").get<int>();
    ac.loss = parse_reconstruction_loss(m.at("loss").get<std::string>());
    ac.loss_weight = m.at("loss_weight").get<double>();
    AutoencoderCheckpoint c{BinaryAutoencoder(ac), j.at("config"), j.at("seed").get<std::uint64_t>(),
                            j.at("step").get<std::int64_t>()};
    tensors_from_json(j.at("parameters").at("encoder"), c.ae.encoder().layout(), c.ae.encoder().params());
    tensors_from_json(j.at("parameters").at("decoder"), c.ae.decoder().layout(), c.ae.decoder().params());
    c.ae.encoder_optimizer() = adam_from_json(j.at("optimizer").at("encoder"), c.ae.encoder().layout());
    c.ae.decoder_optimizer() = adam_from_json(j.at("optimizer").at("decoder"), c.ae.decoder().layout());
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed autoencoder checkpoint: ") + e.what());
  }
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

void save(const json& j, const std::filesystem::path& path) { formats::write_file(path, dump(j)); }

json load(const std::filesystem::path& path) {
  const auto bytes = formats::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace bld::checkpoint
