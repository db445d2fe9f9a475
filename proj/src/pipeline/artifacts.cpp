#include "bamkit/pipeline/artifacts.hpp"

#include "bamkit/fsutil.hpp"
#include "bamkit/tensor_io.hpp"

namespace bamkit::pipeline {

ArtifactWriter::ArtifactWriter(std::filesystem::path root, std::string command)
    : root_(std::move(root)), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void ArtifactWriter::bytes(const std::string& rel, std::span<const std::uint8_t> data) {
  write_file_atomic(root_ / rel, data);
  const std::string hash = sha256_hex(data);
  std::lock_guard lock(mutex_);
  outputs_[rel] = hash;
}

void ArtifactWriter::text(const std::string& rel, const std::string& data) {
  bytes(rel, std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

void ArtifactWriter::json(const std::string& rel, const nlohmann::json& j) { text(rel, j.dump(2) + "\n"); }

void ArtifactWriter::gray_png(const std::string& rel, const png::GrayImage& img) { bytes(rel, png::encode_gray(img)); }

void ArtifactWriter::rgb_png(const std::string& rel, const RgbImage& img) { bytes(rel, png::encode_rgb(img)); }

void ArtifactWriter::heatmap_png(const std::string& rel, const Heatmap& h) { gray_png(rel, png::heatmap_to_gray(h)); }

void ArtifactWriter::mask_png(const std::string& rel, const BinaryMask& m) { gray_png(rel, png::mask_to_gray(m)); }

template <typename T>
void ArtifactWriter::tnsr(const std::string& rel, const BasicTensor<T>& t) {
  bytes(rel, encode_tnsr(t));
}

void ArtifactWriter::adopt(const std::string& rel) {
  const std::string hash = sha256_file(root_ / rel);
  std::lock_guard lock(mutex_);
  outputs_[rel] = hash;
}

void ArtifactWriter::input(const std::filesystem::path& path) {
  const std::string hash = sha256_file(path);
  std::lock_guard lock(mutex_);
  inputs_[path.lexically_relative(root_).generic_string()] = hash;
}

void ArtifactWriter::set_config(const nlohmann::json& resolved) {
  config_ = resolved;
  json("config/" + command_ + ".json", resolved);
}

std::filesystem::path ArtifactWriter::finish() {
  std::lock_guard lock(mutex_);
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& [path, hash] : outputs_) outputs.push_back({{"path", path}, {"sha256", hash}});
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, hash] : inputs_) inputs.push_back({{"path", path}, {"sha256", hash}});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const nlohmann::json manifest = {{"command", command_},
                                   {"config_sha256", sha256_hex(config_.dump())},
                                   {"inputs", inputs},
                                   {"outputs", outputs},
                                   {"timings", {{"total_seconds", seconds}}}};
  const auto path = root_ / "manifests" / (command_ + ".json");
  write_text_atomic(path, manifest.dump(2) + "\n");
  return path;
}

std::map<std::string, std::string> hash_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = entry.path().lexically_relative(root).generic_string();
    if (rel.rfind("manifests/", 0) == 0) continue;
    out[rel] = sha256_file(entry.path());
  }
  return out;
}

template void ArtifactWriter::tnsr(const std::string&, const BasicTensor<float>&);
template void ArtifactWriter::tnsr(const std::string&, const BasicTensor<double>&);

}  // namespace bamkit::pipeline
