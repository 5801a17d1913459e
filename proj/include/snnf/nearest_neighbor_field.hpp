#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "snnf/core_geometry.hpp"
#include "snnf/errors.hpp"
#include "snnf/image.hpp"
#include "snnf/parallel.hpp"
#include "snnf/semantic_edge_map.hpp"

namespace snnf {

struct SeedPixel {
  int u = 0;
  int v = 0;
  friend bool operator==(const SeedPixel&, const SeedPixel&) = default;
};

struct NearestMatch {
  Pixel seed;            // integer seed coordinates
  std::int32_t seed_index = -1;  // row-major index v * width + u
  double distance = 0.0;  // from the query point to the seed
};

/// Exact Euclidean nearest-seed map. For every cell it stores the seed of
/// minimal distance; among equidistant seeds the one with the smallest
/// row-major index wins.
class NearestNeighborField {
 public:
  static constexpr int kGlobal = -1;

  NearestNeighborField() = default;

  /// Empty field of the given size; lookups report no match.
  [[nodiscard]] static NearestNeighborField emptyField(int width, int height, int class_id) {
    NearestNeighborField f;
    f.width_ = width;
    f.height_ = height;
    f.class_id_ = class_id;
    return f;
  }

  /// Builds the field from a binary seed plane (non-zero = seed).
  template <typename Pred>
  [[nodiscard]] static NearestNeighborField fromPredicate(int width, int height, int class_id,
                                                          Pred&& is_seed);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int classId() const noexcept { return class_id_; }
  [[nodiscard]] bool empty() const noexcept { return seed_count_ == 0; }
  [[nodiscard]] std::size_t seedCount() const noexcept { return seed_count_; }

  /// Stored seed index of a cell (row-major), -1 for empty fields.
  [[nodiscard]] std::int32_t seedIndexAt(int u, int v) const {
    return empty() ? -1 : seed_[static_cast<std::size_t>(v) * width_ + u];
  }
  [[nodiscard]] SeedPixel seedAt(int u, int v) const {
    const std::int32_t i = seedIndexAt(u, v);
    return {i % width_, i / width_};
  }
  /// Exact distance from the cell center to its stored seed.
  [[nodiscard]] double distanceAt(int u, int v) const {
    return distance_[static_cast<std::size_t>(v) * width_ + u];
  }

  /// Nearest-cell lookup without exceptions; nullopt when out of bounds or empty.
  [[nodiscard]] std::optional<NearestMatch> tryLookup(const Pixel& p) const {
    if (empty() || !std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
    const double ru = std::floor(p.x() + 0.5);
    const double rv = std::floor(p.y() + 0.5);
    if (ru < 0.0 || rv < 0.0 || ru >= width_ || rv >= height_) return std::nullopt;
    const std::int32_t idx = seed_[static_cast<std::size_t>(rv) * width_ + static_cast<std::size_t>(ru)];
    NearestMatch m;
    m.seed_index = idx;
    m.seed = Pixel(idx % width_, idx / width_);
    m.distance = (p - m.seed).norm();
    return m;
  }

  /// Rounds p to the nearest cell, returns that cell's seed and the exact
  /// distance from the subpixel query to it.
  [[nodiscard]] NearestMatch lookup(const Pixel& p) const {
    if (empty()) throw Error(ErrorKind::kNoMatch, "lookup on a field without seeds");
    auto m = tryLookup(p);
    if (!m) throw Error(ErrorKind::kOutOfBounds, "lookup outside the field grid");
    return *m;
  }

  friend bool operator==(const NearestNeighborField& a, const NearestNeighborField& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.class_id_ == b.class_id_ &&
           a.seed_count_ == b.seed_count_ && a.seed_ == b.seed_ && a.distance_ == b.distance_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int class_id_ = kGlobal;
  std::size_t seed_count_ = 0;
  std::vector<std::int32_t> seed_;
  std::vector<double> distance_;
};

namespace detail {

/// Exact rational p/q with q > 0.
struct Ratio {
  std::int64_t num;
  std::int64_t den;
};
inline bool lessThan(const Ratio& a, const Ratio& b) { return a.num * b.den < b.num * a.den; }
inline bool lessEqualInt(const Ratio& a, std::int64_t x) { return a.num <= x * a.den; }
inline bool lessThanInt(const Ratio& a, std::int64_t x) { return a.num < x * a.den; }

}  // namespace detail

/// Two-pass lower-envelope distance transform in exact integer arithmetic.
/// Pass 1 finds, per column, the nearest seed row (ties to the upper one,
/// which has the smaller index). Pass 2 takes the lower envelope of the
/// parabolas (x - u)^2 + g(u)^2 per row; envelope pieces that touch the
/// minimum at a single breakpoint are kept so exact ties can be resolved by
/// the row-major seed index.
template <typename Pred>
NearestNeighborField NearestNeighborField::fromPredicate(int width, int height, int class_id,
                                                         Pred&& is_seed) {
  using detail::Ratio;
  NearestNeighborField f = emptyField(width, height, class_id);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  constexpr std::int32_t kNone = -1;

  // Pass 1: nearest seed row per column.
  std::vector<std::int32_t> row_of(n, kNone);
  for (int u = 0; u < width; ++u) {
    std::int32_t above = kNone;
    for (int v = 0; v < height; ++v) {
      if (is_seed(u, v)) {
        above = v;
        ++f.seed_count_;
      }
      row_of[static_cast<std::size_t>(v) * width + u] = above;
    }
    std::int32_t below = kNone;
    for (int v = height - 1; v >= 0; --v) {
      const std::size_t i = static_cast<std::size_t>(v) * width + u;
      if (row_of[i] == v) below = v;
      if (below == kNone) continue;
      const std::int32_t a = row_of[i];
      if (a == kNone || (below - v) < (v - a)) row_of[i] = below;
    }
  }
  if (f.seed_count_ == 0) return f;

  f.seed_.assign(n, kNone);
  f.distance_.assign(n, 0.0);

  // Pass 2: per-row lower envelope.
  std::vector<int> hull(width);
  std::vector<Ratio> z(width + 1);
  std::vector<std::int64_t> fval(width);
  for (int v = 0; v < height; ++v) {
    const std::size_t row = static_cast<std::size_t>(v) * width;
    int k = -1;
    for (int q = 0; q < width; ++q) {
      const std::int32_t r = row_of[row + q];
      if (r == kNone) continue;
      const std::int64_t g = static_cast<std::int64_t>(v) - r;
      fval[q] = g * g;
      Ratio s{0, 1};
      while (k >= 0) {
        const int p = hull[k];
        s = Ratio{(fval[q] + std::int64_t{q} * q) - (fval[p] + std::int64_t{p} * p),
                  2 * std::int64_t{q - p}};
        if (k > 0 && detail::lessThan(s, z[k])) {
          --k;
          continue;
        }
        break;
      }
      ++k;
      hull[k] = q;
      if (k == 0) {
        z[0] = Ratio{std::numeric_limits<std::int32_t>::min(), 1};
      } else {
        z[k] = s;
      }
    }
    const int pieces = k + 1;
    int j = 0;
    for (int x = 0; x < width; ++x) {
      while (j + 1 < pieces && detail::lessThanInt(z[j + 1], x)) ++j;
      std::int64_t best_val = std::numeric_limits<std::int64_t>::max();
      std::int32_t best_idx = kNone;
      for (int c = j; c < pieces && (c == j || detail::lessEqualInt(z[c], x)); ++c) {
        const int p = hull[c];
        const std::int64_t dx = x - p;
        const std::int64_t val = dx * dx + fval[p];
        const std::int32_t idx = row_of[row + p] * width + p;
        if (val < best_val || (val == best_val && idx < best_idx)) {
          best_val = val;
          best_idx = idx;
        }
      }
      f.seed_[row + x] = best_idx;
      f.distance_[row + x] = std::sqrt(static_cast<double>(best_val));
    }
  }
  return f;
}

/// Class-blind field over an explicit seed list.
[[nodiscard]] inline NearestNeighborField buildAnnf(const std::vector<SeedPixel>& seeds, int width,
                                                    int height) {
  if (seeds.empty()) throw Error(ErrorKind::kEmptySeeds, "nearest-neighbor field needs seeds");
  BinaryImage plane(width, height);
  for (const auto& s : seeds) {
    if (!plane.contains(s.u, s.v)) throw Error(ErrorKind::kOutOfBounds, "seed outside the grid");
    plane(s.u, s.v) = 1;
  }
  return NearestNeighborField::fromPredicate(
      width, height, NearestNeighborField::kGlobal,
      [&](int u, int v) { return plane(u, v) != 0; });
}

/// Class-blind field seeded by every labeled pixel.
[[nodiscard]] inline NearestNeighborField buildAnnf(const ClassifiedEdges& classes) {
  auto f = NearestNeighborField::fromPredicate(
      classes.width(), classes.height(), NearestNeighborField::kGlobal,
      [&](int u, int v) { return classes.masks(u, v) != 0; });
  if (f.empty()) throw Error(ErrorKind::kEmptySeeds, "nearest-neighbor field needs seeds");
  return f;
}

/// One field per class; field i is seeded by exactly the class-i pixels.
class SemanticFieldSet {
 public:
  SemanticFieldSet() = default;
  explicit SemanticFieldSet(std::vector<NearestNeighborField> fields)
      : fields_(std::move(fields)) {}

  [[nodiscard]] int classCount() const noexcept { return static_cast<int>(fields_.size()); }
  [[nodiscard]] const NearestNeighborField& field(int cls) const { return fields_.at(cls); }
  [[nodiscard]] bool isEmpty(int cls) const { return fields_.at(cls).empty(); }
  [[nodiscard]] std::size_t seedCount(int cls) const { return fields_.at(cls).seedCount(); }
  [[nodiscard]] int width() const { return fields_.empty() ? 0 : fields_.front().width(); }
  [[nodiscard]] int height() const { return fields_.empty() ? 0 : fields_.front().height(); }

  friend bool operator==(const SemanticFieldSet&, const SemanticFieldSet&) = default;

 private:
  std::vector<NearestNeighborField> fields_;
};

/// Per-class fields. Classes without seeds get an empty field that rejects
/// lookups; all classes empty is an error.
[[nodiscard]] inline SemanticFieldSet buildSnnf(const ClassifiedEdges& classes, int threads = 1) {
  if (classes.class_count < 1 || classes.class_count > kMaxClasses) {
    throw Error(ErrorKind::kConfig, "class count must be in [1, 64]");
  }
  std::vector<NearestNeighborField> fields(static_cast<std::size_t>(classes.class_count));
  parallelChunks(fields.size(), 1, threads, [&](std::size_t c, std::size_t, std::size_t) {
    const ClassMask bit = ClassMask{1} << c;
    fields[c] = NearestNeighborField::fromPredicate(
        classes.width(), classes.height(), static_cast<int>(c),
        [&](int u, int v) { return (classes.masks(u, v) & bit) != 0; });
  });
  const bool any = std::any_of(fields.begin(), fields.end(),
                               [](const NearestNeighborField& f) { return !f.empty(); });
  if (!any) throw Error(ErrorKind::kEmptySeeds, "every class is empty");
  return SemanticFieldSet(std::move(fields));
}

}  // namespace snnf
