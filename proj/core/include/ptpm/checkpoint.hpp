#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ptpm/config.hpp"
#include "ptpm/experiment.hpp"

namespace ptpm {

inline constexpr int kCheckpointFormatVersion = 1;

// A trained model plus the configuration that produced it. Serialized as JSON
// with flat numeric arrays; doubles are written with round-trip precision so
// load(save(m)) predicts bit-identically. Training randomness is derived from
// (seed, epoch, sample index), so the generator state is the pair
// (seed, epochs_done).
struct Checkpoint {
  RunConfig config;
  TrainedModel model;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
// Throws DataError on malformed or incompatible checkpoints.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ptpm
