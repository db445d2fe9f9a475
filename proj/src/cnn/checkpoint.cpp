#include "bamkit/cnn/checkpoint.hpp"

#include "bamkit/fsutil.hpp"
#include "bamkit/tensor_io.hpp"

namespace bamkit::cnn {

namespace {

constexpr int kFormatVersion = 1;

std::filesystem::path param_file(const std::string& name) { return std::filesystem::path("params") / (name + ".tnsr"); }

}  // namespace

std::vector<std::filesystem::path> checkpoint_files(const Checkpoint& ckpt) {
  std::vector<std::filesystem::path> out;
  for (const auto& [name, t] : ckpt.params) out.push_back(param_file(name));
  out.emplace_back("checkpoint.json");
  return out;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  (void)Model<float>(ckpt.config, ckpt.params);  // validates shapes
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.params) {
    save_tnsr(dir / param_file(name), t);
    params.push_back({{"name", name}, {"file", param_file(name).generic_string()}, {"shape", t.shape()}});
  }
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["model"] = ckpt.config;
  j["params"] = params;
  j["training"] = {{"seed", ckpt.seed}, {"epochs", ckpt.epochs}, {"history", ckpt.history}};
  if (!ckpt.history.empty()) {
    j["training"]["final_train_loss"] = ckpt.history.back().train_loss;
    j["training"]["final_val_accuracy"] = ckpt.history.back().val_accuracy;
  }
  write_text_atomic(dir / "checkpoint.json", j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "checkpoint.json";
  require(std::filesystem::exists(path), ErrorCode::kIo, "missing checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidData, "malformed checkpoint " + path.string() + ": " + e.what());
  }
  require(j.value("format_version", 0) == kFormatVersion, ErrorCode::kInvalidData,
          "unsupported checkpoint version in " + path.string());
  Checkpoint c;
  c.config = j.at("model").get<ModelConfig>();
  for (const auto& p : j.at("params")) {
    const auto name = p.at("name").get<std::string>();
    Tensor t = load_tnsr<float>(dir / p.at("file").get<std::string>());
    require_shape(t.shape(), p.at("shape").get<Shape>(), name);
    c.params.emplace_back(name, std::move(t));
  }
  const auto& tr = j.at("training");
  c.seed = tr.at("seed").get<std::uint64_t>();
  c.epochs = tr.at("epochs").get<std::size_t>();
  c.history = tr.at("history").get<std::vector<EpochRecord>>();
  (void)Model<float>(c.config, c.params);
  return c;
}

}  // namespace bamkit::cnn
