#include "bamkit/cnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bamkit/fsutil.hpp"
#include "bamkit/rng.hpp"
#include "bamkit/seg/components.hpp"
#include "bamkit/tensor_io.hpp"

namespace bamkit::cnn {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double hue_deg, double s, double v) {
  double h = std::fmod(hue_deg, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Rgb rgb{0, 0, 0};
  if (hp < 1) rgb = {c, x, 0};
  else if (hp < 2) rgb = {x, c, 0};
  else if (hp < 3) rgb = {0, c, x};
  else if (hp < 4) rgb = {0, x, c};
  else if (hp < 5) rgb = {x, 0, c};
  else rgb = {c, 0, x};
  const double m = v - c;
  return {rgb.r + m, rgb.g + m, rgb.b + m};
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

constexpr std::uint64_t kLabelShuffleIndex = ~std::uint64_t{0};

struct BlobShape {
  double cx, cy, r0;
  double amp[3];
  double phase[3];

  // Distance inside the boundary scaled by `scale` (1 = outer edge).
  double signed_distance(double x, double y, double scale = 1.0) const {
    const double dx = x - cx, dy = y - cy;
    const double dist = std::hypot(dx, dy);
    const double theta = std::atan2(dy, dx);
    double r = 1.0;
    for (int m = 0; m < 3; ++m) r += amp[m] * std::sin((m + 2) * theta + phase[m]);
    return scale * r0 * r - dist;
  }
};

}  // namespace

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& a : s.classes) {
    classes.push_back({{"hue_center_deg", a.hue_center_deg},
                       {"hue_halfwidth_deg", a.hue_halfwidth_deg},
                       {"saturation", a.saturation},
                       {"value", a.value},
                       {"texture_amplitude", a.texture_amplitude},
                       {"edge_softness_px", a.edge_softness_px}});
  }
  j = {{"seed", s.seed},
       {"image_size", s.image_size},
       {"classes", classes},
       {"margin_fraction", s.margin_fraction},
       {"margin_hue_deg", s.margin_hue_deg},
       {"margin_saturation", s.margin_saturation},
       {"margin_value", s.margin_value},
       {"core_softness_px", s.core_softness_px},
       {"background_hue_deg", s.background_hue_deg},
       {"background_saturation", s.background_saturation},
       {"background_value", s.background_value},
       {"noise_level", s.noise_level},
       {"shading_amplitude", s.shading_amplitude},
       {"radius_min_frac", s.radius_min_frac},
       {"radius_max_frac", s.radius_max_frac},
       {"wobble_max", s.wobble_max}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s = SyntheticSpec{};
  s.seed = j.value("seed", s.seed);
  s.image_size = j.value("image_size", s.image_size);
  if (j.contains("classes")) {
    const auto& cs = j.at("classes");
    require(cs.size() == 4, ErrorCode::kInvalidArgument, "synthetic spec needs exactly 4 class archetypes");
    for (std::size_t i = 0; i < 4; ++i) {
      auto& a = s.classes[i];
      a.hue_center_deg = cs[i].value("hue_center_deg", a.hue_center_deg);
      a.hue_halfwidth_deg = cs[i].value("hue_halfwidth_deg", a.hue_halfwidth_deg);
      a.saturation = cs[i].value("saturation", a.saturation);
      a.value = cs[i].value("value", a.value);
      a.texture_amplitude = cs[i].value("texture_amplitude", a.texture_amplitude);
      a.edge_softness_px = cs[i].value("edge_softness_px", a.edge_softness_px);
    }
  }
  s.margin_fraction = j.value("margin_fraction", s.margin_fraction);
  s.margin_hue_deg = j.value("margin_hue_deg", s.margin_hue_deg);
  s.margin_saturation = j.value("margin_saturation", s.margin_saturation);
  s.margin_value = j.value("margin_value", s.margin_value);
  s.core_softness_px = j.value("core_softness_px", s.core_softness_px);
  s.background_hue_deg = j.value("background_hue_deg", s.background_hue_deg);
  s.background_saturation = j.value("background_saturation", s.background_saturation);
  s.background_value = j.value("background_value", s.background_value);
  s.noise_level = j.value("noise_level", s.noise_level);
  s.shading_amplitude = j.value("shading_amplitude", s.shading_amplitude);
  s.radius_min_frac = j.value("radius_min_frac", s.radius_min_frac);
  s.radius_max_frac = j.value("radius_max_frac", s.radius_max_frac);
  s.wobble_max = j.value("wobble_max", s.wobble_max);
}

Sample generate_sample(const SyntheticSpec& spec, std::uint64_t stream, std::size_t index, std::size_t label) {
  require(label < 4, ErrorCode::kInvalidArgument, "synthetic label must be < 4");
  require(spec.image_size >= 8, ErrorCode::kInvalidArgument, "synthetic images must be at least 8x8");
  const std::size_t n = spec.image_size;
  const double size = static_cast<double>(n);
  Rng rng = Rng::derive(spec.seed, stream, index);
  const auto& arch = spec.classes[label];

  const Rgb bg = hsv_to_rgb(spec.background_hue_deg + rng.uniform(-4, 4),
                            clamp01(spec.background_saturation + rng.uniform(-0.05, 0.05)),
                            clamp01(spec.background_value + rng.uniform(-0.05, 0.05)));
  require(spec.margin_fraction >= 0.0 && spec.margin_fraction < 1.0, ErrorCode::kInvalidArgument,
          "margin_fraction must be in [0, 1)");
  const Rgb margin = hsv_to_rgb(spec.margin_hue_deg + rng.uniform(-4, 4),
                                clamp01(spec.margin_saturation + rng.uniform(-0.05, 0.05)),
                                clamp01(spec.margin_value + rng.uniform(-0.05, 0.05)));
  const Rgb fg = hsv_to_rgb(arch.hue_center_deg + rng.uniform(-arch.hue_halfwidth_deg, arch.hue_halfwidth_deg),
                            clamp01(arch.saturation + rng.uniform(-0.05, 0.05)),
                            clamp01(arch.value + rng.uniform(-0.05, 0.05)));
  const double shade_dir = rng.uniform(0, 2 * std::numbers::pi);
  const double shade_amp = rng.uniform(0, spec.shading_amplitude);
  const double tex_dir = rng.uniform(0, 2 * std::numbers::pi);
  const double tex_freq = rng.uniform(0.3, 0.6);
  const double tex_phase = rng.uniform(0, 2 * std::numbers::pi);

  BlobShape blob{};
  BinaryMask mask(n, n);
  std::vector<double> distance(n * n);
  // Star-shaped blobs are connected except for rare rasterization slivers;
  // redraw until the mask is a single 8-connected region.
  for (;;) {
    blob.cx = rng.uniform(0.3, 0.7) * size;
    blob.cy = rng.uniform(0.3, 0.7) * size;
    blob.r0 = rng.uniform(spec.radius_min_frac, spec.radius_max_frac) * size;
    for (int m = 0; m < 3; ++m) {
      blob.amp[m] = rng.uniform(0, spec.wobble_max);
      blob.phase[m] = rng.uniform(0, 2 * std::numbers::pi);
    }
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double d = blob.signed_distance(static_cast<double>(x), static_cast<double>(y));
        distance[y * n + x] = d;
        mask(y, x) = d >= 0.0 ? 1 : 0;
      }
    }
    if (mask.count() > 0 && seg::label_components(mask).count() == 1) break;
  }

  Tensor image(Shape{3, n, n});
  const double soft = std::max(arch.edge_softness_px, 1e-6);
  const double core_soft = std::max(spec.core_softness_px, 1e-6);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double along = (fx * std::cos(shade_dir) + fy * std::sin(shade_dir)) / size;
      const double shade = 1.0 + shade_amp * (2.0 * along - 1.0);
      const double tex = arch.texture_amplitude *
                         (std::sin(tex_freq * (fx * std::cos(tex_dir) + fy * std::sin(tex_dir)) + tex_phase) +
                          rng.uniform(-0.5, 0.5));
      const double alpha = std::clamp(0.5 + distance[y * n + x] / (2.0 * soft), 0.0, 1.0);
      const double core = spec.margin_fraction > 0.0
                              ? std::clamp(0.5 + blob.signed_distance(fx, fy, 1.0 - spec.margin_fraction) /
                                                     (2.0 * core_soft),
                                           0.0, 1.0)
                              : 1.0;
      const double bgc[3] = {bg.r * shade, bg.g * shade, bg.b * shade};
      const double lesion[3] = {margin.r + core * (fg.r - margin.r), margin.g + core * (fg.g - margin.g),
                                margin.b + core * (fg.b - margin.b)};
      const double fgc[3] = {lesion[0] * (1.0 + tex), lesion[1] * (1.0 + tex), lesion[2] * (1.0 + tex)};
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = bgc[c] * (1.0 - alpha) + fgc[c] * alpha + rng.uniform(-spec.noise_level, spec.noise_level);
        image.at(c, y, x) = static_cast<float>(clamp01(v));
      }
    }
  }
  return Sample{std::move(image), std::move(mask), label};
}

Dataset generate_split(const SyntheticSpec& spec, std::uint64_t stream, std::size_t n) {
  require(n > 0, ErrorCode::kInvalidArgument, "split size must be positive");
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % 4;
  Rng shuffle = Rng::derive(spec.seed, stream, kLabelShuffleIndex);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(labels[i], labels[shuffle.below(i + 1)]);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_sample(spec, stream, i, labels[i]));
  return out;
}

SyntheticData generate_dataset(const SyntheticSpec& spec, std::size_t n_train, std::size_t n_val) {
  return SyntheticData{generate_split(spec, 0, n_train), generate_split(spec, 1, n_val)};
}

void save_splits(const std::filesystem::path& dir, const SyntheticSpec& spec,
                 const std::vector<std::pair<std::string, const Dataset*>>& splits) {
  nlohmann::json manifest;
  manifest["spec"] = spec;
  manifest["label_map"] = nlohmann::json::array();
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    manifest["label_map"].push_back({{"label", i}, {"name", kClassNames[i]}});
  }
  manifest["splits"] = nlohmann::json::object();
  for (const auto& [name, data] : splits) {
    require(!data->empty(), ErrorCode::kInvalidArgument, "cannot save empty split " + name);
    const std::size_t n = data->size(), s = data->front().mask.height;
    Tensor images(Shape{n, 3, s, s});
    Tensor masks(Shape{n, s, s});
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
      const Sample& smp = (*data)[i];
      std::copy(smp.image.data().begin(), smp.image.data().end(), images.ptr() + i * 3 * s * s);
      std::transform(smp.mask.bits.begin(), smp.mask.bits.end(), masks.ptr() + i * s * s,
                     [](std::uint8_t b) { return static_cast<float>(b); });
      labels.push_back(smp.label);
    }
    save_tnsr(dir / (name + "_images.tnsr"), images);
    save_tnsr(dir / (name + "_masks.tnsr"), masks);
    manifest["splits"][name] = {{"count", n},
                                {"images", name + "_images.tnsr"},
                                {"masks", name + "_masks.tnsr"},
                                {"labels", labels}};
  }
  write_text_atomic(dir / "dataset.json", manifest.dump(2) + "\n");
}

Dataset load_split(const std::filesystem::path& dir, const std::string& name) {
  const auto manifest_path = dir / "dataset.json";
  require(std::filesystem::exists(manifest_path), ErrorCode::kIo, "missing dataset manifest " + manifest_path.string());
  const auto manifest = nlohmann::json::parse(read_text(manifest_path));
  require(manifest.contains("splits") && manifest["splits"].contains(name), ErrorCode::kInvalidData,
          "dataset has no split named " + name);
  const auto& entry = manifest["splits"][name];
  const Tensor images = load_tnsr<float>(dir / entry.at("images").get<std::string>());
  const Tensor masks = load_tnsr<float>(dir / entry.at("masks").get<std::string>());
  const auto labels = entry.at("labels").get<std::vector<std::size_t>>();
  require(images.rank() == 4 && images.dim(1) == 3 && masks.rank() == 3, ErrorCode::kInvalidData,
          "dataset tensors have unexpected shapes");
  const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3);
  require(masks.dim(0) == n && labels.size() == n && masks.dim(1) == h && masks.dim(2) == w, ErrorCode::kInvalidData,
          "dataset split " + name + " has inconsistent sizes");
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* ip = images.ptr() + i * 3 * h * w;
    const float* mp = masks.ptr() + i * h * w;
    BinaryMask mask(h, w);
    for (std::size_t k = 0; k < h * w; ++k) mask.bits[k] = mp[k] >= 0.5f ? 1 : 0;
    out.push_back(Sample{Tensor(Shape{3, h, w}, std::vector<float>(ip, ip + 3 * h * w)), std::move(mask), labels[i]});
  }
  return out;
}

}  // namespace bamkit::cnn
