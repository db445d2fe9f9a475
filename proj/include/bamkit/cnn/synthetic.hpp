#pragma once

// Synthetic four-class "lesion" images with known ground-truth regions. Each
// image holds one star-shaped blob on a skin-toned, shaded, noisy background.
// The class sets the hue band of the blob's core (disjoint across classes),
// its texture amplitude and its edge softness, so the label is recoverable
// from hue alone. An optional outer margin looks the same for every class.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bamkit/image.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit::cnn {

inline constexpr std::array<const char*, 4> kClassNames = {"SPF", "SPT", "DPT", "FT"};

struct BlobArchetype {
  double hue_center_deg;
  double hue_halfwidth_deg;
  double saturation;
  double value;
  double texture_amplitude;
  double edge_softness_px;
};

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t image_size = 64;
  std::array<BlobArchetype, 4> classes = {{
      {340.0, 6.0, 0.45, 0.95, 0.03, 1.0},   // pink
      {0.0, 6.0, 0.80, 0.80, 0.05, 1.5},     // red
      {280.0, 6.0, 0.50, 0.55, 0.08, 2.5},   // violet
      {55.0, 6.0, 0.40, 0.85, 0.12, 0.7},    // pale yellow
  }};
  // Outer band of every lesion shared by all classes; the class appearance
  // fills only the inner core.
  double margin_fraction = 0.45;     // fraction of the lesion radius
  double margin_hue_deg = 12.0;
  double margin_saturation = 0.60;
  double margin_value = 0.70;
  double core_softness_px = 1.5;
  double background_hue_deg = 24.0;
  double background_saturation = 0.32;
  double background_value = 0.85;
  double noise_level = 0.04;         // uniform per-pixel noise half-width
  double shading_amplitude = 0.08;
  double radius_min_frac = 0.25;     // blob base radius as a fraction of image size
  double radius_max_frac = 0.38;
  double wobble_max = 0.12;          // amplitude of each radial harmonic
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

struct Sample {
  Tensor image;       // [3,H,W] in [0,1]
  BinaryMask mask;    // blob region
  std::size_t label = 0;
};

using Dataset = std::vector<Sample>;

struct SyntheticData {
  Dataset train;
  Dataset val;
};

// Streams 0 and 1 of `spec.seed`. Labels are balanced (counts differ by at
// most one) and shuffled.
SyntheticData generate_dataset(const SyntheticSpec& spec, std::size_t n_train, std::size_t n_val);

// `stream` selects an independent split (0 train, 1 val, 2 test, ...).
Dataset generate_split(const SyntheticSpec& spec, std::uint64_t stream, std::size_t n);

// One sample of the given class; deterministic in (spec.seed, stream, index).
Sample generate_sample(const SyntheticSpec& spec, std::uint64_t stream, std::size_t index, std::size_t label);

// On-disk layout: <name>_images.tnsr [N,3,H,W] F32, <name>_masks.tnsr [N,H,W]
// F32 (0/1); labels, label map and spec go in dataset.json.
void save_splits(const std::filesystem::path& dir, const SyntheticSpec& spec,
                 const std::vector<std::pair<std::string, const Dataset*>>& splits);
Dataset load_split(const std::filesystem::path& dir, const std::string& name);

}  // namespace bamkit::cnn
