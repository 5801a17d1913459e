#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "snnf/core_geometry.hpp"
#include "snnf/errors.hpp"
#include "snnf/image.hpp"
#include "snnf/random.hpp"
#include "snnf/semantic_edge_map.hpp"

namespace snnf {

struct Segment3 {
  Point3 a;
  Point3 b;
  int class_id = 0;

  friend bool operator==(const Segment3&, const Segment3&) = default;
};

/// Labeled wireframe in world coordinates.
struct SceneModel {
  std::vector<Segment3> segments;
  int class_count = 1;

  friend bool operator==(const SceneModel&, const SceneModel&) = default;
};

enum class SceneKind { kCubeGrid, kAmbiguityGrating, kCorridor };

struct SceneParams {
  int class_count = 2;

  // cube_grid
  int cube_count = 12;
  double cube_size = 1.0;
  double min_depth = 5.0;
  double max_depth = 20.0;

  // ambiguity_grating: two fronto-parallel grids side by side, the far one
  // scaled so both project with the same image spacing.
  double grating_spacing = 0.4;  // meters, on the near plane
  double near_depth = 8.0;
  double far_depth = 16.0;
  int grating_lines = 10;  // per orientation and plane

  // corridor
  double corridor_width = 4.0;
  double corridor_height = 3.0;
  double corridor_length = 40.0;
  int corridor_frames = 16;
};

namespace detail {

inline void addCube(SceneModel& m, const Point3& center, double size, const Eigen::Matrix3d& r,
                    int cls) {
  const double h = 0.5 * size;
  Point3 c[8];
  for (int i = 0; i < 8; ++i) {
    const Point3 local((i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h);
    c[i] = center + r * local;
  }
  for (int i = 0; i < 8; ++i) {
    for (int bit : {1, 2, 4}) {
      if (!(i & bit)) m.segments.push_back({c[i], c[i | bit], cls});
    }
  }
}

inline void addGrid(SceneModel& m, double x0, double y0, double z, double spacing, int lines,
                    int class_count) {
  const double extent = spacing * (lines - 1);
  for (int i = 0; i < lines; ++i) {
    const int cls = i % class_count;
    const double x = x0 + i * spacing;
    const double y = y0 + i * spacing;
    m.segments.push_back({Point3(x, y0, z), Point3(x, y0 + extent, z), cls});
    m.segments.push_back({Point3(x0, y, z), Point3(x0 + extent, y, z), cls});
  }
}

}  // namespace detail

[[nodiscard]] inline SceneModel buildScene(SceneKind kind, std::uint64_t seed,
                                           const SceneParams& p = {}) {
  if (p.class_count < 1 || p.class_count > kMaxClasses) {
    throw Error(ErrorKind::kConfig, "class_count must be in [1, 64]");
  }
  SceneModel m;
  m.class_count = p.class_count;
  switch (kind) {
    case SceneKind::kCubeGrid: {
      if (p.cube_count < 1 || !(p.cube_size > 0.0) || !(p.min_depth > 0.0) ||
          !(p.max_depth >= p.min_depth)) {
        throw Error(ErrorKind::kConfig, "invalid cube_grid parameters");
      }
      Rng rng(seed);
      for (int i = 0; i < p.cube_count; ++i) {
        const double z = rng.uniform(p.min_depth, p.max_depth);
        const double x = rng.uniform(-0.45, 0.45) * z;
        const double y = rng.uniform(-0.3, 0.3) * z;
        // Generic orientation, so no edge rasterizes as an exact pixel row
        // or column.
        const Eigen::Vector3d w(rng.uniform(-0.6, 0.6), rng.uniform(0.0, 0.5 * std::numbers::pi),
                                rng.uniform(-0.6, 0.6));
        detail::addCube(m, Point3(x, y, z), p.cube_size, so3Exp(w), i % p.class_count);
      }
      break;
    }
    case SceneKind::kAmbiguityGrating: {
      if (!(p.grating_spacing > 0.0) || p.grating_lines < 2 || !(p.near_depth > 0.0) ||
          !(p.far_depth > p.near_depth)) {
        throw Error(ErrorKind::kConfig, "invalid ambiguity_grating parameters");
      }
      // Near grid left of the optical axis, far grid right of it.
      const double near_extent = p.grating_spacing * (p.grating_lines - 1);
      const double far_spacing = p.grating_spacing * p.far_depth / p.near_depth;
      const double far_extent = far_spacing * (p.grating_lines - 1);
      const double gap = 0.25 * p.grating_spacing;
      detail::addGrid(m, -near_extent - gap, -0.5 * near_extent, p.near_depth, p.grating_spacing,
                      p.grating_lines, p.class_count);
      detail::addGrid(m, gap * p.far_depth / p.near_depth, -0.5 * far_extent, p.far_depth,
                      far_spacing, p.grating_lines, p.class_count);
      break;
    }
    case SceneKind::kCorridor: {
      if (!(p.corridor_width > 0.0) || !(p.corridor_height > 0.0) ||
          !(p.corridor_length > 0.0) || p.corridor_frames < 1) {
        throw Error(ErrorKind::kConfig, "invalid corridor parameters");
      }
      const double hw = 0.5 * p.corridor_width;
      const double hh = 0.5 * p.corridor_height;
      const int floor_cls = 0;
      const int wall_cls = 1 % p.class_count;
      const int ceiling_cls = 2 % p.class_count;
      // Door frames along the corridor plus the four long corner lines.
      for (int i = 0; i < p.corridor_frames; ++i) {
        const double z = 2.0 + p.corridor_length * i / p.corridor_frames;
        m.segments.push_back({Point3(-hw, hh, z), Point3(hw, hh, z), floor_cls});
        m.segments.push_back({Point3(-hw, -hh, z), Point3(hw, -hh, z), ceiling_cls});
        m.segments.push_back({Point3(-hw, -hh, z), Point3(-hw, hh, z), wall_cls});
        m.segments.push_back({Point3(hw, -hh, z), Point3(hw, hh, z), wall_cls});
      }
      const double z_end = 2.0 + p.corridor_length;
      m.segments.push_back({Point3(-hw, hh, 0.0), Point3(-hw, hh, z_end), floor_cls});
      m.segments.push_back({Point3(hw, hh, 0.0), Point3(hw, hh, z_end), floor_cls});
      m.segments.push_back({Point3(-hw, -hh, 0.0), Point3(-hw, -hh, z_end), ceiling_cls});
      m.segments.push_back({Point3(hw, -hh, 0.0), Point3(hw, -hh, z_end), ceiling_cls});
      break;
    }
  }
  return m;
}

struct RenderOutput {
  SemanticEdgeMap edges;      // binary-valued planes
  InverseDepthImage inverse_depth;  // 0 where no edge was drawn
  GrayImage gray;
  Pose pose;                  // camera-to-world
  std::vector<std::string> warnings;

  [[nodiscard]] ClassifiedEdges classes() const { return classifyEdges(edges, 0.5); }
};

inline constexpr double kRenderNearPlane = 0.1;

namespace detail {

/// Liang-Barsky clip of p0 + t (p1 - p0) against [lo, hi]^2 box; returns the
/// surviving parameter interval or false.
inline bool clip2d(const Pixel& p0, const Pixel& p1, const Pixel& lo, const Pixel& hi, double& t0,
                   double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const Pixel d = p1 - p0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {p0.x() - lo.x(), hi.x() - p0.x(), p0.y() - lo.y(), hi.y() - p0.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  return true;
}

inline float classIntensity(int cls, int class_count) {
  return static_cast<float>(0.55 + 0.4 * (cls + 1) / (class_count + 1));
}

}  // namespace detail

/// Rasterizes the wireframe at 1 px width. Segments are clipped to the near
/// plane and the image rectangle; along each segment the major image axis is
/// stepped one pixel at a time and inverse depth is interpolated linearly in
/// screen space (exact under perspective). Overlapping segments OR their
/// class bits and keep the nearest depth. No hidden-line removal.
[[nodiscard]] inline RenderOutput renderView(const SceneModel& scene, const Pose& camera_to_world,
                                             const CameraIntrinsics& k, int width, int height) {
  if (width < 3 || height < 3) throw Error(ErrorKind::kDimension, "render size below 3x3");
  if (!k.valid()) throw Error(ErrorKind::kConfig, "invalid intrinsics");
  RenderOutput out;
  out.pose = camera_to_world;
  out.edges.width = width;
  out.edges.height = height;
  out.edges.planes.assign(static_cast<std::size_t>(scene.class_count), GrayImage(width, height));
  out.inverse_depth = InverseDepthImage(width, height, 0.0f);
  GrayImage paint(width, height, -1.0f);
  const Pose world_to_camera = camera_to_world.inverse();
  const Pixel lo(-0.5, -0.5);
  const Pixel hi(width - 0.5, height - 0.5);
  std::size_t drawn = 0;

  for (const Segment3& s : scene.segments) {
    if (s.class_id < 0 || s.class_id >= scene.class_count) {
      throw Error(ErrorKind::kConfig, "segment class id out of range");
    }
    Point3 a = world_to_camera * s.a;
    Point3 b = world_to_camera * s.b;
    if (a.z() < kRenderNearPlane && b.z() < kRenderNearPlane) continue;
    if (a.z() < kRenderNearPlane) a = a + (b - a) * ((kRenderNearPlane - a.z()) / (b.z() - a.z()));
    if (b.z() < kRenderNearPlane) b = b + (a - b) * ((kRenderNearPlane - b.z()) / (a.z() - b.z()));
    const Pixel pa = project(a, k);
    const Pixel pb = project(b, k);
    double t0 = 0.0;
    double t1 = 1.0;
    if (!detail::clip2d(pa, pb, lo, hi, t0, t1)) continue;
    const double da = 1.0 / a.z();
    const double db = 1.0 / b.z();
    const Pixel d = pb - pa;
    const bool major_u = std::abs(d.x()) >= std::abs(d.y());
    const double start = major_u ? pa.x() + t0 * d.x() : pa.y() + t0 * d.y();
    const double end = major_u ? pa.x() + t1 * d.x() : pa.y() + t1 * d.y();
    const double major_d = major_u ? d.x() : d.y();
    const int i0 = static_cast<int>(std::ceil(std::min(start, end) - 0.5));
    const int i1 = static_cast<int>(std::floor(std::max(start, end) + 0.5));
    const float intensity = detail::classIntensity(s.class_id, scene.class_count);
    for (int i = i0; i <= i1; ++i) {
      double t;
      if (major_d == 0.0) {
        t = t0;  // projects to a single point
      } else {
        const double origin = major_u ? pa.x() : pa.y();
        t = std::clamp((i - origin) / major_d, t0, t1);
      }
      const Pixel q = pa + t * d;
      const int u = static_cast<int>(std::floor(q.x() + 0.5));
      const int v = static_cast<int>(std::floor(q.y() + 0.5));
      if (u < 0 || v < 0 || u >= width || v >= height) continue;
      const double inv = da + t * (db - da);
      out.edges.planes[static_cast<std::size_t>(s.class_id)](u, v) = 1.0f;
      float& cell = out.inverse_depth(u, v);
      if (static_cast<float>(inv) > cell) {
        cell = static_cast<float>(inv);
        paint(u, v) = intensity;
      }
      ++drawn;
    }
  }
  if (drawn == 0) out.warnings.push_back("render produced no edge pixels");

  // Smooth radial background plus class-banded lines, then a light blur.
  out.gray = GrayImage(width, height);
  const double rmax2 = 0.25 * (static_cast<double>(width) * width + static_cast<double>(height) * height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double du = u - 0.5 * (width - 1);
      const double dv = v - 0.5 * (height - 1);
      const float bg = static_cast<float>(0.15 + 0.2 * (du * du + dv * dv) / rmax2);
      out.gray(u, v) = paint(u, v) >= 0.0f ? paint(u, v) : bg;
    }
  }
  out.gray = binomialBlur(out.gray);
  return out;
}

enum class TrajectoryKind { kDolly, kArc, kLateral };

struct TrajectoryParams {
  double step = 0.2;          // meters per frame
  double total_angle = 0.0;   // arc only, radians over the whole sequence
};

/// Camera-to-world poses; frame 0 is the identity.
[[nodiscard]] inline std::vector<Pose> generateTrajectory(TrajectoryKind kind, int n,
                                                          const TrajectoryParams& p = {}) {
  if (n < 1) throw Error(ErrorKind::kConfig, "trajectory needs at least one pose");
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(n));
  if (kind == TrajectoryKind::kArc) {
    Se3Tangent xi = Se3Tangent::Zero();
    xi(2) = p.step;
    xi(4) = n > 1 ? p.total_angle / (n - 1) : 0.0;
    const Pose m = se3Exp(xi);
    Pose cur;
    for (int i = 0; i < n; ++i) {
      poses.push_back(cur);
      cur = cur * m;
    }
    return poses;
  }
  const Eigen::Vector3d dir = kind == TrajectoryKind::kDolly ? Eigen::Vector3d::UnitZ()
                                                             : Eigen::Vector3d::UnitX();
  for (int i = 0; i < n; ++i) poses.push_back(Pose::fromTranslation(dir * (p.step * i)));
  return poses;
}

[[nodiscard]] inline const char* toString(SceneKind k) {
  switch (k) {
    case SceneKind::kCubeGrid: return "cube_grid";
    case SceneKind::kAmbiguityGrating: return "ambiguity_grating";
    case SceneKind::kCorridor: return "corridor";
  }
  return "unknown";
}

[[nodiscard]] inline const char* toString(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kDolly: return "dolly";
    case TrajectoryKind::kArc: return "arc";
    case TrajectoryKind::kLateral: return "lateral";
  }
  return "unknown";
}

}  // namespace snnf
