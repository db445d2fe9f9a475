#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bamkit/cnn/model.hpp"
#include "bamkit/cnn/train.hpp"

namespace bamkit::cnn {

struct Checkpoint {
  ModelConfig config;
  Params<float> params;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::vector<EpochRecord> history;

  Model<float> model() const { return Model<float>(config, params); }
};

// Directory layout: checkpoint.json plus params/<name>.tnsr per tensor.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Files written by save_checkpoint, relative to `dir`, in write order.
std::vector<std::filesystem::path> checkpoint_files(const Checkpoint& ckpt);

}  // namespace bamkit::cnn
