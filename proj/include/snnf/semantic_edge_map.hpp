#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "snnf/core_geometry.hpp"
#include "snnf/errors.hpp"
#include "snnf/image.hpp"
#include "snnf/random.hpp"

namespace snnf {

inline constexpr int kMaxClasses = 64;

/// Multi-label membership, bit i set when the pixel belongs to class i.
using ClassMask = std::uint64_t;

/// Per-class edge probability planes.
struct SemanticEdgeMap {
  int width = 0;
  int height = 0;
  std::vector<GrayImage> planes;
  std::vector<std::string> class_names;  // empty or one entry per plane

  [[nodiscard]] int classCount() const noexcept { return static_cast<int>(planes.size()); }

  /// Throws when planes disagree in size, values leave [0,1] or the class
  /// count is outside [1, 64].
  void validate() const {
    if (planes.empty() || planes.size() > static_cast<std::size_t>(kMaxClasses)) {
      throw Error(ErrorKind::kConfig, "class count must be in [1, 64]");
    }
    if (!class_names.empty() && class_names.size() != planes.size()) {
      throw Error(ErrorKind::kConfig, "class-name table size differs from class count");
    }
    for (const auto& p : planes) {
      if (!p.sameShape(width, height)) {
        throw Error(ErrorKind::kDimension, "probability planes differ in size");
      }
      for (float x : p.pixels()) {
        if (!(x >= 0.0f && x <= 1.0f)) {
          throw Error(ErrorKind::kDomain, "probability outside [0,1]");
        }
      }
    }
  }
};

/// Output of classifyEdges: a label bitmask per pixel.
struct ClassifiedEdges {
  Image<ClassMask> masks;
  int class_count = 0;

  [[nodiscard]] int width() const noexcept { return masks.width(); }
  [[nodiscard]] int height() const noexcept { return masks.height(); }

  [[nodiscard]] BinaryImage plane(int cls) const {
    BinaryImage out(masks.width(), masks.height());
    const ClassMask bit = ClassMask{1} << cls;
    for (std::size_t i = 0; i < masks.size(); ++i) out[i] = (masks[i] & bit) ? 1 : 0;
    return out;
  }

  [[nodiscard]] std::size_t count(int cls) const {
    const ClassMask bit = ClassMask{1} << cls;
    return static_cast<std::size_t>(
        std::count_if(masks.pixels().begin(), masks.pixels().end(),
                      [bit](ClassMask m) { return (m & bit) != 0; }));
  }

  [[nodiscard]] std::size_t labeledCount() const {
    return static_cast<std::size_t>(std::count_if(
        masks.pixels().begin(), masks.pixels().end(), [](ClassMask m) { return m != 0; }));
  }

  /// Seeds pooled over all classes, as a one-class labeling (ANNF input).
  [[nodiscard]] ClassifiedEdges merged() const {
    ClassifiedEdges out{Image<ClassMask>(width(), height()), 1};
    for (std::size_t i = 0; i < masks.size(); ++i) out.masks[i] = masks[i] ? 1 : 0;
    return out;
  }

  /// Factor-2^level seed downsampling: seed (u, v) maps to (u >> L, v >> L).
  [[nodiscard]] ClassifiedEdges downsampled(int level) const {
    if (level <= 0) return *this;
    const int w = std::max(1, width() >> level);
    const int h = std::max(1, height() >> level);
    ClassifiedEdges out{Image<ClassMask>(w, h), class_count};
    for (int v = 0; v < height(); ++v) {
      for (int u = 0; u < width(); ++u) {
        const ClassMask m = masks(u, v);
        const int ud = u >> level;
        const int vd = v >> level;
        if (m && ud < w && vd < h) out.masks(ud, vd) |= m;
      }
    }
    return out;
  }
};

/// A sampled pixel ready for registration. Edge points carry at least one
/// class bit, supportive points carry none.
struct EdgePoint {
  Pixel pixel;
  InverseDepth inverse_depth;
  ClassMask class_mask = 0;
  double weight = 1.0;
  std::optional<Eigen::Vector2d> tangent_normal;

  [[nodiscard]] bool isSupport() const noexcept { return class_mask == 0; }
};

struct EdgeCloud {
  std::vector<EdgePoint> points;
  int frame_id = 0;
  int class_count = 1;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] bool empty() const noexcept { return points.empty(); }
  [[nodiscard]] std::size_t edgeCount() const {
    return static_cast<std::size_t>(std::count_if(
        points.begin(), points.end(), [](const EdgePoint& p) { return !p.isSupport(); }));
  }

  /// Same points, every edge point relabeled to class 0 (class-blind matching).
  [[nodiscard]] EdgeCloud classBlind() const {
    EdgeCloud out = *this;
    out.class_count = 1;
    for (auto& p : out.points) {
      if (p.class_mask) p.class_mask = 1;
    }
    return out;
  }
};

// -----------------------------------------------------------------------------
// Image gradients
// -----------------------------------------------------------------------------

struct ImageGradient {
  GrayImage gx;
  GrayImage gy;
};

/// Central differences in the interior, one-sided differences on the border.
[[nodiscard]] inline ImageGradient centralGradient(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw Error(ErrorKind::kDimension, "gradient needs an image of at least 3x3");
  }
  ImageGradient g{GrayImage(w, h), GrayImage(w, h)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (u == 0) {
        g.gx(u, v) = img(1, v) - img(0, v);
      } else if (u == w - 1) {
        g.gx(u, v) = img(w - 1, v) - img(w - 2, v);
      } else {
        g.gx(u, v) = 0.5f * (img(u + 1, v) - img(u - 1, v));
      }
      if (v == 0) {
        g.gy(u, v) = img(u, 1) - img(u, 0);
      } else if (v == h - 1) {
        g.gy(u, v) = img(u, h - 1) - img(u, h - 2);
      } else {
        g.gy(u, v) = 0.5f * (img(u, v + 1) - img(u, v - 1));
      }
    }
  }
  return g;
}

[[nodiscard]] inline GrayImage gradientMagnitude(const GrayImage& img) {
  const ImageGradient g = centralGradient(img);
  GrayImage out(img.width(), img.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(g.gx[i], g.gy[i]);
  return out;
}

using NormalImage = Image<Eigen::Vector2f>;

/// Dominant local gradient orientation (unit normal of the edge) from the
/// structure tensor summed over a (2r+1)^2 window. Cells with no gradient
/// energy get a zero vector. Unlike the raw gradient this is well defined on
/// the center line of thin ridges, where the central difference vanishes.
[[nodiscard]] inline NormalImage edgeNormals(const GrayImage& img, int radius = 2) {
  const ImageGradient g = centralGradient(img);
  const int w = img.width();
  const int h = img.height();
  // Box sums of gx^2, gx*gy, gy^2 via integral images.
  const auto integral = [w, h](auto&& value) {
    std::vector<double> s(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int v = 0; v < h; ++v) {
      double row = 0.0;
      for (int u = 0; u < w; ++u) {
        row += value(static_cast<std::size_t>(v) * w + u);
        s[static_cast<std::size_t>(v + 1) * (w + 1) + u + 1] =
            s[static_cast<std::size_t>(v) * (w + 1) + u + 1] + row;
      }
    }
    return s;
  };
  const auto sxx = integral([&](std::size_t i) { return double(g.gx[i]) * g.gx[i]; });
  const auto sxy = integral([&](std::size_t i) { return double(g.gx[i]) * g.gy[i]; });
  const auto syy = integral([&](std::size_t i) { return double(g.gy[i]) * g.gy[i]; });
  const auto box = [w](const std::vector<double>& s, int u0, int v0, int u1, int v1) {
    const auto at = [&](int u, int v) { return s[static_cast<std::size_t>(v) * (w + 1) + u]; };
    return at(u1 + 1, v1 + 1) - at(u0, v1 + 1) - at(u1 + 1, v0) + at(u0, v0);
  };
  NormalImage out(w, h, Eigen::Vector2f::Zero());
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const int u0 = std::max(0, u - radius);
      const int v0 = std::max(0, v - radius);
      const int u1 = std::min(w - 1, u + radius);
      const int v1 = std::min(h - 1, v + radius);
      const double a = box(sxx, u0, v0, u1, v1);
      const double b = box(sxy, u0, v0, u1, v1);
      const double c = box(syy, u0, v0, u1, v1);
      if (a + c < 1e-12) continue;
      const double angle = 0.5 * std::atan2(2.0 * b, a - c);
      Eigen::Vector2f n(static_cast<float>(std::cos(angle)), static_cast<float>(std::sin(angle)));
      const Eigen::Vector2f grad(g.gx(u, v), g.gy(u, v));
      if (grad.dot(n) < 0.0f) n = -n;
      out(u, v) = n;
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Built-in edge detector
// -----------------------------------------------------------------------------

/// Gradient magnitude, non-maximum suppression across the (4-way quantized)
/// gradient direction, and 8-connected hysteresis between `low` and `high`.
/// Along the suppression direction a pixel must be strictly larger than its
/// backward neighbor and at least as large as its forward neighbor, so a
/// plateau of two equal responses yields a single pixel.
[[nodiscard]] inline BinaryImage detectEdges(const GrayImage& img, double low, double high) {
  if (!(low >= 0.0) || !(high >= low) || !std::isfinite(high)) {
    throw Error(ErrorKind::kConfig, "edge thresholds must satisfy 0 <= low <= high");
  }
  const ImageGradient g = centralGradient(img);
  const int w = img.width();
  const int h = img.height();
  GrayImage mag(w, h);
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(g.gx[i], g.gy[i]);
  const auto m = [&](int u, int v) -> float { return mag.contains(u, v) ? mag(u, v) : 0.0f; };

  BinaryImage candidate(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const float here = mag(u, v);
      if (here <= 0.0f || here < low) continue;
      double angle = std::atan2(g.gy(u, v), g.gx(u, v)) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      int du;
      int dv;
      if (angle < 22.5 || angle >= 157.5) {
        du = 1; dv = 0;
      } else if (angle < 67.5) {
        du = 1; dv = 1;
      } else if (angle < 112.5) {
        du = 0; dv = 1;
      } else {
        du = -1; dv = 1;
      }
      if (here >= m(u + du, v + dv) && here > m(u - du, v - dv)) candidate(u, v) = 1;
    }
  }

  BinaryImage out(w, h);
  std::deque<std::pair<int, int>> queue;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (candidate(u, v) && mag(u, v) >= high) {
        out(u, v) = 1;
        queue.emplace_back(u, v);
      }
    }
  }
  while (!queue.empty()) {
    const auto [u, v] = queue.front();
    queue.pop_front();
    for (int dv = -1; dv <= 1; ++dv) {
      for (int du = -1; du <= 1; ++du) {
        const int nu = u + du;
        const int nv = v + dv;
        if (!out.contains(nu, nv) || out(nu, nv) || !candidate(nu, nv)) continue;
        out(nu, nv) = 1;
        queue.emplace_back(nu, nv);
      }
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Fusion and classification
// -----------------------------------------------------------------------------

/// Independent edge and segmentation probabilities: plane_i = edge * seg_i.
[[nodiscard]] inline SemanticEdgeMap fuseEdgeSemantics(const GrayImage& edge_prob,
                                                       const std::vector<GrayImage>& seg_probs,
                                                       std::vector<std::string> class_names = {}) {
  if (seg_probs.empty() || seg_probs.size() > static_cast<std::size_t>(kMaxClasses)) {
    throw Error(ErrorKind::kConfig, "need between 1 and 64 segmentation planes");
  }
  const auto in_unit = [](const GrayImage& img) {
    return std::all_of(img.pixels().begin(), img.pixels().end(),
                       [](float x) { return x >= 0.0f && x <= 1.0f; });
  };
  if (!in_unit(edge_prob)) throw Error(ErrorKind::kDomain, "edge probability outside [0,1]");
  SemanticEdgeMap out{edge_prob.width(), edge_prob.height(), {}, std::move(class_names)};
  for (const auto& seg : seg_probs) {
    if (!seg.sameShape(edge_prob)) {
      throw Error(ErrorKind::kDimension, "segmentation plane size differs from edge map");
    }
    if (!in_unit(seg)) throw Error(ErrorKind::kDomain, "segmentation probability outside [0,1]");
    GrayImage fused(edge_prob.width(), edge_prob.height());
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = edge_prob[i] * seg[i];
    out.planes.push_back(std::move(fused));
  }
  out.validate();
  return out;
}

/// Pixel p carries class i iff plane_i(p) >= tau; several bits may be set.
[[nodiscard]] inline ClassifiedEdges classifyEdges(const SemanticEdgeMap& map, double tau = 0.5) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::kConfig, "tau must lie in (0,1)");
  map.validate();
  ClassifiedEdges out{Image<ClassMask>(map.width, map.height), map.classCount()};
  for (int c = 0; c < map.classCount(); ++c) {
    const ClassMask bit = ClassMask{1} << c;
    const GrayImage& plane = map.planes[c];
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (plane[i] >= tau) out.masks[i] |= bit;
    }
  }
  return out;
}

// -----------------------------------------------------------------------------
// Sampling
// -----------------------------------------------------------------------------

enum class EdgeWeighting { kUniform, kGradientMagnitude };

struct EdgeSamplingOptions {
  std::size_t budget = 3000;
  double tau = 0.5;
  std::uint64_t seed = 0;
  EdgeWeighting weighting = EdgeWeighting::kUniform;
  int frame_id = 0;
};

inline constexpr int kSamplingBlocks = 8;

namespace detail {

/// Splits `budget` over groups of the given sizes: groups that cannot fill an
/// even share are taken whole, the rest get floor/ceil of the remaining share
/// (the +1 goes to the earliest groups).
[[nodiscard]] inline std::vector<std::size_t> waterFill(const std::vector<std::size_t>& sizes,
                                                        std::size_t budget) {
  std::vector<std::size_t> quota(sizes.size(), 0);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > 0) active.push_back(i);
  }
  std::size_t remaining = budget;
  for (bool changed = true; changed && !active.empty();) {
    changed = false;
    const std::size_t share = remaining / active.size();
    std::vector<std::size_t> keep;
    for (std::size_t i : active) {
      if (sizes[i] <= share) {
        quota[i] = sizes[i];
        remaining -= sizes[i];
        changed = true;
      } else {
        keep.push_back(i);
      }
    }
    active = std::move(keep);
  }
  if (!active.empty()) {
    const std::size_t share = remaining / active.size();
    std::size_t extra = remaining % active.size();
    for (std::size_t i : active) {
      quota[i] = share + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
    }
  }
  return quota;
}

}  // namespace detail

/// Seeded, spatially stratified sample of labeled pixels with valid depth.
/// The image is split into an 8x8 block grid and the budget is spread evenly
/// across blocks; points come back in row-major order.
[[nodiscard]] inline EdgeCloud sampleEdgeCloud(const ClassifiedEdges& classes,
                                               const InverseDepthImage& depth,
                                               const GrayImage& gray,
                                               const EdgeSamplingOptions& opt) {
  if (opt.budget < 1) throw Error(ErrorKind::kConfig, "sampling budget must be >= 1");
  const int w = classes.width();
  const int h = classes.height();
  if (!depth.sameShape(w, h) || !gray.sameShape(w, h)) {
    throw Error(ErrorKind::kDimension, "edge map, depth and image sizes differ");
  }
  constexpr int kBlocks = kSamplingBlocks;
  std::vector<std::vector<std::uint32_t>> blocks(kBlocks * kBlocks);
  for (int v = 0; v < h; ++v) {
    const int by = static_cast<int>(static_cast<long>(v) * kBlocks / h);
    for (int u = 0; u < w; ++u) {
      const std::size_t i = classes.masks.index(u, v);
      if (classes.masks[i] == 0 || !validInverseDepth(depth[i])) continue;
      const int bx = static_cast<int>(static_cast<long>(u) * kBlocks / w);
      blocks[by * kBlocks + bx].push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::vector<std::size_t> sizes;
  for (const auto& b : blocks) sizes.push_back(b.size());
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total == 0) throw Error(ErrorKind::kEmptyCloud, "no labeled pixel with valid depth");

  std::vector<std::uint32_t> chosen;
  if (total <= opt.budget) {
    for (const auto& b : blocks) chosen.insert(chosen.end(), b.begin(), b.end());
  } else {
    const auto quota = detail::waterFill(sizes, opt.budget);
    Rng rng(opt.seed);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto items = blocks[b];
      if (quota[b] < items.size()) rng.shuffle(items);
      chosen.insert(chosen.end(), items.begin(), items.begin() + static_cast<long>(quota[b]));
    }
  }
  std::sort(chosen.begin(), chosen.end());

  const NormalImage normals = edgeNormals(gray);
  GrayImage grad;
  double mean_grad = 1.0;
  if (opt.weighting == EdgeWeighting::kGradientMagnitude) {
    grad = gradientMagnitude(gray);
    double sum = 0.0;
    for (std::uint32_t i : chosen) sum += grad[i];
    mean_grad = sum / static_cast<double>(chosen.size());
  }

  EdgeCloud cloud;
  cloud.frame_id = opt.frame_id;
  cloud.class_count = classes.class_count;
  cloud.points.reserve(chosen.size());
  for (std::uint32_t i : chosen) {
    const int u = static_cast<int>(i % static_cast<std::uint32_t>(w));
    const int v = static_cast<int>(i / static_cast<std::uint32_t>(w));
    EdgePoint p{Pixel(u, v), InverseDepth(depth[i]), classes.masks[i], 1.0, std::nullopt};
    if (opt.weighting == EdgeWeighting::kGradientMagnitude && mean_grad > 0.0) {
      p.weight = grad[i] / mean_grad;
    }
    const Eigen::Vector2f n = normals[i];
    if (n.squaredNorm() > 0.0f) p.tangent_normal = n.cast<double>().normalized();
    cloud.points.push_back(std::move(p));
  }
  return cloud;
}

[[nodiscard]] inline EdgeCloud sampleEdgeCloud(const SemanticEdgeMap& map,
                                               const InverseDepthImage& depth,
                                               const GrayImage& gray,
                                               const EdgeSamplingOptions& opt) {
  return sampleEdgeCloud(classifyEdges(map, opt.tau), depth, gray, opt);
}

struct SupportSamplingOptions {
  std::size_t target_total = 4000;
  std::size_t min_support = 1000;
  double margin = 7.0 / 255.0;  // over the block median gradient
  std::uint64_t seed = 0;
};

/// Number of supportive pixels for a given edge count.
[[nodiscard]] inline std::size_t supportCount(std::size_t n_edges,
                                              const SupportSamplingOptions& opt) {
  const std::size_t rest = n_edges >= opt.target_total ? 0 : opt.target_total - n_edges;
  return std::max(opt.min_support, rest);
}

/// Unlabeled pixels with valid depth, picked by block-wise adaptive
/// thresholding: per block, the strongest gradient pixel is a candidate if it
/// exceeds the block median by `margin`. Blocks shrink by half until enough
/// candidates exist; any shortfall is filled with random eligible pixels.
/// `labels` (optional) excludes labeled pixels. Returns exactly
/// supportCount() points unless fewer eligible pixels exist.
[[nodiscard]] inline std::vector<EdgePoint> sampleSupportPixels(
    const GrayImage& grad, const InverseDepthImage& depth, std::size_t n_edges,
    const SupportSamplingOptions& opt, const Image<ClassMask>* labels = nullptr) {
  if (opt.target_total < opt.min_support) {
    throw Error(ErrorKind::kConfig, "support target must be >= minimum support");
  }
  const int w = grad.width();
  const int h = grad.height();
  if (!depth.sameShape(w, h) || (labels && !labels->sameShape(w, h))) {
    throw Error(ErrorKind::kDimension, "support sampling inputs differ in size");
  }
  const std::size_t wanted = supportCount(n_edges, opt);
  const auto eligible = [&](std::size_t i) {
    return validInverseDepth(depth[i]) && (!labels || (*labels)[i] == 0);
  };

  Rng rng(opt.seed);
  std::vector<std::uint8_t> taken(grad.size(), 0);
  std::vector<std::uint32_t> chosen;
  const double area = static_cast<double>(w) * h;
  int block = std::max(1, static_cast<int>(std::sqrt(area / std::max<std::size_t>(wanted, 1))));
  std::vector<float> values;
  while (chosen.size() < wanted && block > 1) {
    std::vector<std::uint32_t> candidates;
    for (int by = 0; by < h; by += block) {
      for (int bx = 0; bx < w; bx += block) {
        values.clear();
        std::int64_t best = -1;
        for (int v = by; v < std::min(h, by + block); ++v) {
          for (int u = bx; u < std::min(w, bx + block); ++u) {
            const std::size_t i = grad.index(u, v);
            if (taken[i] || !eligible(i)) continue;
            values.push_back(grad[i]);
            if (best < 0 || grad[i] > grad[static_cast<std::size_t>(best)]) {
              best = static_cast<std::int64_t>(i);
            }
          }
        }
        if (best < 0) continue;
        auto mid = values.begin() + static_cast<long>(values.size() / 2);
        std::nth_element(values.begin(), mid, values.end());
        if (grad[static_cast<std::size_t>(best)] > *mid + opt.margin) {
          candidates.push_back(static_cast<std::uint32_t>(best));
        }
      }
    }
    const std::size_t need = wanted - chosen.size();
    if (candidates.size() > need) {
      rng.shuffle(candidates);
      candidates.resize(need);
    }
    for (std::uint32_t i : candidates) {
      taken[i] = 1;
      chosen.push_back(i);
    }
    block /= 2;
  }
  if (chosen.size() < wanted) {
    std::vector<std::uint32_t> pool;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!taken[i] && eligible(i)) pool.push_back(static_cast<std::uint32_t>(i));
    }
    const std::size_t need = wanted - chosen.size();
    if (pool.size() > need) {
      rng.shuffle(pool);
      pool.resize(need);
    }
    chosen.insert(chosen.end(), pool.begin(), pool.end());
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<EdgePoint> out;
  out.reserve(chosen.size());
  for (std::uint32_t i : chosen) {
    const int u = static_cast<int>(i % static_cast<std::uint32_t>(w));
    const int v = static_cast<int>(i / static_cast<std::uint32_t>(w));
    out.push_back(EdgePoint{Pixel(u, v), InverseDepth(depth[i]), 0, 1.0, std::nullopt});
  }
  return out;
}

}  // namespace snnf
