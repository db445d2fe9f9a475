#include "bamkit/ldi/ldi.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "bamkit/rng.hpp"

namespace bamkit::ldi {

namespace {

constexpr std::uint64_t kLdiStream = 0x4C44;

}  // namespace

const char* category_name(HpCategory c) {
  switch (c) {
    case HpCategory::kHpLt14: return "HP_LT_14";
    case HpCategory::kHp14To21: return "HP_14_21";
    case HpCategory::kHpGt21: return "HP_GT_21";
    case HpCategory::kNonBurn: return "NON_BURN";
  }
  return "NON_BURN";
}

HpCategory parse_category(const std::string& name) {
  for (auto c : {HpCategory::kHpLt14, HpCategory::kHp14To21, HpCategory::kHpGt21, HpCategory::kNonBurn}) {
    if (name == category_name(c)) return c;
  }
  fail(ErrorCode::kInvalidData, "unknown healing-potential category \"" + name + "\"");
}

void PaletteTable::validate() const {
  require(!entries.empty(), ErrorCode::kInvalidData, "palette table is empty");
  for (auto c : {HpCategory::kHpLt14, HpCategory::kHp14To21, HpCategory::kHpGt21}) {
    bool found = false;
    for (const auto& e : entries) found = found || e.category == c;
    require(found, ErrorCode::kInvalidData, std::string("palette has no entry for ") + category_name(c));
  }
}

PaletteTable PaletteTable::default_synthetic() {
  using C = HpCategory;
  return PaletteTable{{
      {{0, 0, 0}, C::kNonBurn},
      {{255, 0, 0}, C::kHpLt14},
      {{255, 0, 160}, C::kHpLt14},
      {{255, 128, 192}, C::kHpLt14},
      {{0, 200, 0}, C::kHp14To21},
      {{160, 255, 0}, C::kHp14To21},
      {{255, 255, 0}, C::kHp14To21},
      {{0, 0, 160}, C::kHpGt21},
      {{0, 64, 255}, C::kHpGt21},
      {{0, 160, 255}, C::kHpGt21},
  }};
}

const PaletteEntry& PaletteTable::first_of(HpCategory c) const {
  for (const auto& e : entries) {
    if (e.category == c) return e;
  }
  fail(ErrorCode::kInvalidData, std::string("palette has no entry for ") + category_name(c));
}

void to_json(nlohmann::json& j, const PaletteTable& p) {
  j = nlohmann::json{{"entries", nlohmann::json::array()}};
  for (const auto& e : p.entries) j["entries"].push_back({{"rgb", e.rgb}, {"category", category_name(e.category)}});
}

void from_json(const nlohmann::json& j, PaletteTable& p) {
  p.entries.clear();
  for (const auto& e : j.at("entries")) {
    const auto rgb = e.at("rgb").get<std::vector<int>>();
    require(rgb.size() == 3, ErrorCode::kInvalidData, "palette rgb must have 3 components");
    PaletteEntry pe;
    for (std::size_t c = 0; c < 3; ++c) {
      require(rgb[c] >= 0 && rgb[c] <= 255, ErrorCode::kInvalidData, "palette rgb values must be in [0,255]");
      pe.rgb[c] = static_cast<std::uint8_t>(rgb[c]);
    }
    pe.category = parse_category(e.at("category").get<std::string>());
    p.entries.push_back(pe);
  }
  p.validate();
}

Point AlignmentTransform::apply(Point p) const {
  const double c = scale * std::cos(rotation), s = scale * std::sin(rotation);
  return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
}

Point AlignmentTransform::apply_inverse(Point q) const {
  const double c = std::cos(rotation) / scale, s = std::sin(rotation) / scale;
  const double x = q.x - tx, y = q.y - ty;
  return {c * x + s * y, -s * x + c * y};
}

void to_json(nlohmann::json& j, const AlignmentTransform& t) {
  j = {{"scale", t.scale}, {"rotation", t.rotation}, {"tx", t.tx}, {"ty", t.ty}};
}

void from_json(const nlohmann::json& j, AlignmentTransform& t) {
  t.scale = j.at("scale").get<double>();
  t.rotation = j.at("rotation").get<double>();
  t.tx = j.at("tx").get<double>();
  t.ty = j.at("ty").get<double>();
  require(t.scale > 0.0, ErrorCode::kInvalidData, "alignment scale must be positive");
}

AlignmentFit estimate_alignment(const std::vector<Point>& scan, const std::vector<Point>& photo) {
  using cd = std::complex<double>;
  require(scan.size() == photo.size(), ErrorCode::kInvalidArgument, "landmark lists differ in length");
  require(scan.size() >= 2, ErrorCode::kInvalidArgument, "alignment needs at least 2 landmark pairs");
  const double n = static_cast<double>(scan.size());
  cd pm{0, 0}, qm{0, 0};
  for (std::size_t i = 0; i < scan.size(); ++i) {
    pm += cd(scan[i].x, scan[i].y);
    qm += cd(photo[i].x, photo[i].y);
  }
  pm /= n;
  qm /= n;
  cd num{0, 0};
  double den = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const cd p = cd(scan[i].x, scan[i].y) - pm;
    const cd q = cd(photo[i].x, photo[i].y) - qm;
    num += std::conj(p) * q;
    den += std::norm(p);
    spread = std::max(spread, std::abs(cd(scan[i].x, scan[i].y)));
  }
  require(den > 1e-18 * std::max(1.0, spread * spread) * n, ErrorCode::kInvalidData,
          "degenerate landmarks: scan points coincide");
  const cd a = num / den;
  require(std::abs(a) > 0.0, ErrorCode::kInvalidData, "degenerate landmarks: photo points coincide");
  const cd b = qm - a * pm;
  AlignmentFit fit;
  fit.transform = {std::abs(a), std::arg(a), b.real(), b.imag()};
  double sq = 0.0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const cd r = a * cd(scan[i].x, scan[i].y) + b - cd(photo[i].x, photo[i].y);
    sq += std::norm(r);
  }
  fit.residual_rms = std::sqrt(sq / n);
  return fit;
}

RgbImage warp_scan(const RgbImage& scan, const AlignmentTransform& t, std::size_t out_h, std::size_t out_w,
                   const Rgb& fill) {
  require(t.scale > 0.0 && std::isfinite(t.scale), ErrorCode::kInvalidArgument, "alignment is not invertible");
  require(out_h > 0 && out_w > 0, ErrorCode::kInvalidArgument, "warp target must be non-empty");
  RgbImage out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      const Point p = t.apply_inverse({static_cast<double>(x), static_cast<double>(y)});
      const double sx = std::floor(p.x + 0.5), sy = std::floor(p.y + 0.5);
      std::uint8_t* dst = out.at(y, x);
      if (sx < 0 || sy < 0 || sx >= static_cast<double>(scan.width) || sy >= static_cast<double>(scan.height)) {
        std::copy(fill.begin(), fill.end(), dst);
      } else {
        const std::uint8_t* src = scan.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        std::copy(src, src + 3, dst);
      }
    }
  }
  return out;
}

CategoryMap classify_palette(const RgbImage& scan, const PaletteTable& table) {
  require(!table.entries.empty(), ErrorCode::kInvalidArgument, "palette table is empty");
  CategoryMap out(scan.height, scan.width);
  for (std::size_t i = 0; i < scan.height * scan.width; ++i) {
    const std::uint8_t* px = &scan.pixels[3 * i];
    long best = -1;
    HpCategory cat = HpCategory::kNonBurn;
    for (const auto& e : table.entries) {
      long d = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        const long diff = static_cast<long>(px[c]) - static_cast<long>(e.rgb[c]);
        d += diff * diff;
      }
      if (best < 0 || d < best) {
        best = d;
        cat = e.category;
      }
    }
    out.cells[i] = cat;
  }
  return out;
}

CategoryMap restrict_to_manual(const CategoryMap& categories, const BinaryMask& manual) {
  require_same_dims(categories.height, categories.width, manual.height, manual.width, "restrict_to_manual");
  CategoryMap out = categories;
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    if (!manual.bits[i]) out.cells[i] = HpCategory::kNonBurn;
  }
  return out;
}

LdiMasks ldi_masks(const CategoryMap& categories) {
  const std::size_t h = categories.height, w = categories.width;
  LdiMasks m{BinaryMask(h, w), BinaryMask(h, w), BinaryMask(h, w), BinaryMask(h, w)};
  for (std::size_t i = 0; i < categories.cells.size(); ++i) {
    switch (categories.cells[i]) {
      case HpCategory::kHpLt14: m.hp_lt_14.bits[i] = 1; break;
      case HpCategory::kHp14To21: m.hp_14_21.bits[i] = 1; break;
      case HpCategory::kHpGt21: m.hp_gt_21.bits[i] = 1; break;
      case HpCategory::kNonBurn: break;
    }
    m.all.bits[i] = m.hp_lt_14.bits[i] | m.hp_14_21.bits[i] | m.hp_gt_21.bits[i];
  }
  return m;
}

RgbImage render_categories(const CategoryMap& categories, const PaletteTable& table) {
  RgbImage out(categories.height, categories.width);
  for (std::size_t i = 0; i < categories.cells.size(); ++i) {
    const Rgb& c = table.first_of(categories.cells[i]).rgb;
    std::copy(c.begin(), c.end(), &out.pixels[3 * i]);
  }
  return out;
}

void to_json(nlohmann::json& j, const SyntheticLdi& s) {
  auto pts = [](const std::vector<Point>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({p.x, p.y});
    return a;
  };
  j = {{"truth", s.truth},
       {"scan_size", {s.scan.height, s.scan.width}},
       {"scan_landmarks", pts(s.scan_landmarks)},
       {"photo_landmarks", pts(s.photo_landmarks)}};
}

SyntheticLdi synthesize_ldi(const BinaryMask& burn, const PaletteTable& table, std::uint64_t seed, std::size_t index,
                            double noise) {
  table.validate();
  const std::size_t h = burn.height, w = burn.width;
  Rng rng = Rng::derive(seed, kLdiStream, index);
  SyntheticLdi s;

  // Healing-potential bands over the burn follow a tilted linear field.
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cut1 = rng.uniform(-0.35, -0.05), cut2 = rng.uniform(0.05, 0.35);
  const double margin = std::floor(0.06 * static_cast<double>(std::min(h, w)));
  s.photo_categories = CategoryMap(h, w);
  double cx = 0, cy = 0;
  std::size_t area = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (burn(y, x)) {
        cx += static_cast<double>(x);
        cy += static_cast<double>(y);
        ++area;
      }
    }
  }
  if (area > 0) {
    cx /= static_cast<double>(area);
    cy /= static_cast<double>(area);
  }
  const double radius = std::max(1.0, std::sqrt(static_cast<double>(area) / std::numbers::pi));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      HpCategory c = HpCategory::kHpLt14;
      const auto fx = static_cast<double>(x), fy = static_cast<double>(y);
      if (fx < margin || fy < margin || fx >= static_cast<double>(w) - margin || fy >= static_cast<double>(h) - margin) {
        c = HpCategory::kNonBurn;
      } else if (burn(y, x)) {
        const double u = ((fx - cx) * std::cos(dir) + (fy - cy) * std::sin(dir)) / radius;
        c = u < cut1 ? HpCategory::kHpGt21 : (u < cut2 ? HpCategory::kHp14To21 : HpCategory::kHpLt14);
      }
      s.photo_categories(y, x) = c;
    }
  }

  // The scan sees the photo through a similarity transform.
  const double scale = rng.uniform(1.1, 1.4);
  const double rot = rng.uniform(-0.15, 0.15);
  const std::size_t sh = static_cast<std::size_t>(std::ceil(static_cast<double>(h) / scale)) + 4;
  const std::size_t sw = static_cast<std::size_t>(std::ceil(static_cast<double>(w) / scale)) + 4;
  // Centre the photo inside the scan.
  const AlignmentTransform no_shift{scale, rot, 0.0, 0.0};
  const Point scan_centre{0.5 * static_cast<double>(sw - 1), 0.5 * static_cast<double>(sh - 1)};
  const Point mapped = no_shift.apply(scan_centre);
  s.truth = {scale, rot, 0.5 * static_cast<double>(w - 1) - mapped.x + rng.uniform(-1.5, 1.5),
             0.5 * static_cast<double>(h - 1) - mapped.y + rng.uniform(-1.5, 1.5)};

  s.scan = RgbImage(sh, sw);
  for (std::size_t v = 0; v < sh; ++v) {
    for (std::size_t u = 0; u < sw; ++u) {
      const Point q = s.truth.apply({static_cast<double>(u), static_cast<double>(v)});
      const double qx = std::floor(q.x + 0.5), qy = std::floor(q.y + 0.5);
      HpCategory c = HpCategory::kNonBurn;
      if (qx >= 0 && qy >= 0 && qx < static_cast<double>(w) && qy < static_cast<double>(h)) {
        c = s.photo_categories(static_cast<std::size_t>(qy), static_cast<std::size_t>(qx));
      }
      const Rgb& base = table.first_of(c).rgb;
      std::uint8_t* px = s.scan.at(v, u);
      for (std::size_t k = 0; k < 3; ++k) {
        const double val = static_cast<double>(base[k]) + rng.uniform(-noise, noise);
        px[k] = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
      }
    }
  }

  const double fw = static_cast<double>(w - 1), fh = static_cast<double>(h - 1);
  for (const Point& q : {Point{0.1 * fw, 0.1 * fh}, Point{0.9 * fw, 0.15 * fh}, Point{0.85 * fw, 0.9 * fh},
                         Point{0.15 * fw, 0.85 * fh}}) {
    s.photo_landmarks.push_back(q);
    s.scan_landmarks.push_back(s.truth.apply_inverse(q));
  }
  return s;
}

}  // namespace bamkit::ldi
