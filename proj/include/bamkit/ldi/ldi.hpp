#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bamkit/image.hpp"

namespace bamkit::ldi {

enum class HpCategory : std::uint8_t { kHpLt14 = 0, kHp14To21 = 1, kHpGt21 = 2, kNonBurn = 3 };

const char* category_name(HpCategory c);  // "HP_LT_14", "HP_14_21", "HP_GT_21", "NON_BURN"
HpCategory parse_category(const std::string& name);

using Rgb = std::array<std::uint8_t, 3>;

struct PaletteEntry {
  Rgb rgb{};
  HpCategory category = HpCategory::kNonBurn;
};

struct PaletteTable {
  std::vector<PaletteEntry> entries;

  // Needs at least one entry per burn category.
  void validate() const;
  // Blue family -> HP > 21, green/yellow -> 14..21, red/pink -> HP < 14,
  // black -> non-burn.
  static PaletteTable default_synthetic();
  // First entry of the given category; used when rendering scans.
  const PaletteEntry& first_of(HpCategory c) const;
};

void to_json(nlohmann::json& j, const PaletteTable& p);
void from_json(const nlohmann::json& j, PaletteTable& p);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// photo = scale * R(rotation) * scan + (tx, ty)
struct AlignmentTransform {
  double scale = 1.0;
  double rotation = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point apply(Point p) const;
  Point apply_inverse(Point q) const;
};

void to_json(nlohmann::json& j, const AlignmentTransform& t);
void from_json(const nlohmann::json& j, AlignmentTransform& t);

struct AlignmentFit {
  AlignmentTransform transform;
  double residual_rms = 0.0;
};

// Least-squares similarity transform taking scan landmarks onto photo
// landmarks.
AlignmentFit estimate_alignment(const std::vector<Point>& scan, const std::vector<Point>& photo);

// Nearest-neighbour resampling of the scan onto an out_h x out_w photo grid.
// Pixel (x, y) reads scan pixel round(T^-1(x, y)); outside the scan gets
// `fill`.
RgbImage warp_scan(const RgbImage& scan, const AlignmentTransform& t, std::size_t out_h, std::size_t out_w,
                   const Rgb& fill);

struct CategoryMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<HpCategory> cells;

  CategoryMap() = default;
  CategoryMap(std::size_t h, std::size_t w, HpCategory fill = HpCategory::kNonBurn)
      : height(h), width(w), cells(h * w, fill) {}
  HpCategory& operator()(std::size_t y, std::size_t x) { return cells[y * width + x]; }
  HpCategory operator()(std::size_t y, std::size_t x) const { return cells[y * width + x]; }
  bool operator==(const CategoryMap&) const = default;
};

// Nearest palette colour in RGB distance; ties go to the earlier entry.
CategoryMap classify_palette(const RgbImage& scan, const PaletteTable& table);

CategoryMap restrict_to_manual(const CategoryMap& categories, const BinaryMask& manual);

struct LdiMasks {
  BinaryMask hp_lt_14;
  BinaryMask hp_14_21;
  BinaryMask hp_gt_21;
  BinaryMask all;  // union of the three
};

LdiMasks ldi_masks(const CategoryMap& categories);

// Renders a category map with its palette colours.
RgbImage render_categories(const CategoryMap& categories, const PaletteTable& table);

struct SyntheticLdi {
  RgbImage scan;                 // scan-space image
  AlignmentTransform truth;      // scan -> photo
  std::vector<Point> scan_landmarks;
  std::vector<Point> photo_landmarks;
  CategoryMap photo_categories;  // ground truth on the photo grid
};

void to_json(nlohmann::json& j, const SyntheticLdi& s);  // landmarks and transform only

// A scan of the photo region: burn pixels get healing-potential bands, other
// skin reads as well perfused (HP < 14), and the border outside the scanned
// field is non-burn. Deterministic in (seed, index).
SyntheticLdi synthesize_ldi(const BinaryMask& burn, const PaletteTable& table, std::uint64_t seed, std::size_t index,
                            double noise = 6.0);

}  // namespace bamkit::ldi
