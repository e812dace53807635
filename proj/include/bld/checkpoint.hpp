#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "bld/binae.hpp"
#include "bld/denoiser.hpp"
#include "bld/model.hpp"
#include "bld/nn.hpp"
#include "bld/schedule.hpp"

/// "BLD1" checkpoints: one JSON document holding the run config, every
/// parameter tensor as nested lists of doubles, the optimizer state, the
/// seed and the step counter.
namespace bld::checkpoint {

inline constexpr const char* kFormat = "BLD1";

struct DiffusionCheckpoint {
  DenoiserNet net;
  NoiseSchedule schedule;
  nn::AdamState optimizer;
  PredictionTarget target = PredictionTarget::Residual;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

struct AutoencoderCheckpoint {
  BinaryAutoencoder ae;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

nlohmann::json tensors_to_json(const nn::ParamLayout& layout, std::span<const double> values);
void tensors_from_json(const nlohmann::json& j, const nn::ParamLayout& layout, std::span<double> values);

nlohmann::json to_json(const DiffusionCheckpoint& ckpt);
nlohmann::json to_json(const AutoencoderCheckpoint& ckpt);
DiffusionCheckpoint diffusion_from_json(const nlohmann::json& j);
AutoencoderCheckpoint autoencoder_from_json(const nlohmann::json& j);

/// Serialized text, pretty-printed with sorted keys (byte-stable).
std::string dump(const nlohmann::json& j);
void save(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load(const std::filesystem::path& path);

}  // namespace bld::checkpoint
