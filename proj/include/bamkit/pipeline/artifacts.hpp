#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>

#include "json.hpp"

#include "bamkit/image.hpp"
#include "bamkit/png.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit::pipeline {

// Writes files under an output root atomically and records each file's
// SHA-256 for the run manifest. Safe to use from several threads.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path root, std::string command);

  const std::filesystem::path& root() const noexcept { return root_; }

  void bytes(const std::string& rel, std::span<const std::uint8_t> data);
  void text(const std::string& rel, const std::string& data);
  void json(const std::string& rel, const nlohmann::json& j);
  void gray_png(const std::string& rel, const png::GrayImage& img);
  void rgb_png(const std::string& rel, const RgbImage& img);
  void heatmap_png(const std::string& rel, const Heatmap& h);
  void mask_png(const std::string& rel, const BinaryMask& m);
  template <typename T>
  void tnsr(const std::string& rel, const BasicTensor<T>& t);
  // Records a file produced by other code (e.g. a checkpoint writer).
  void adopt(const std::string& rel);

  void input(const std::filesystem::path& path);
  void set_config(const nlohmann::json& resolved);

  // Writes manifests/<command>.json listing outputs in path order; returns
  // its path.
  std::filesystem::path finish();

  const std::map<std::string, std::string>& outputs() const noexcept { return outputs_; }

 private:
  std::filesystem::path root_;
  std::string command_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json config_;
  std::mutex mutex_;
  std::map<std::string, std::string> outputs_;  // rel path -> sha256
  std::map<std::string, std::string> inputs_;
};

// Relative path -> sha256 of every file under `root` except manifests/.
std::map<std::string, std::string> hash_tree(const std::filesystem::path& root);

}  // namespace bamkit::pipeline
