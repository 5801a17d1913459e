#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "snnf/core_geometry.hpp"
#include "snnf/edge_registration.hpp"
#include "snnf/errors.hpp"
#include "snnf/parallel.hpp"
#include "snnf/semantic_edge_map.hpp"
#include "snnf/trajectory.hpp"

namespace snnf {

struct AteReport {
  double rmse = 0.0;
  std::vector<int> ids;
  std::vector<double> errors;  // per evaluated frame, meters
  std::size_t discarded = 0;
  bool aligned = false;
};

/// Absolute trajectory error over camera positions of frames present in
/// both trajectories, after dropping the first `discard` common frames.
/// With `align`, a similarity transform (Umeyama, with scale) maps the
/// estimated positions onto ground truth first.
[[nodiscard]] inline AteReport ate(const Trajectory& est, const Trajectory& gt,
                                   std::size_t discard = 10, bool align = false) {
  std::map<int, Eigen::Vector3d> gt_pos;
  for (const auto& e : gt.entries) gt_pos[e.id] = e.pose.translation();
  std::vector<std::pair<int, std::pair<Eigen::Vector3d, Eigen::Vector3d>>> pairs;
  for (const auto& e : est.entries) {
    auto it = gt_pos.find(e.id);
    if (it != gt_pos.end()) pairs.push_back({e.id, {e.pose.translation(), it->second}});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  AteReport rep;
  rep.discarded = std::min(discard, pairs.size());
  pairs.erase(pairs.begin(), pairs.begin() + static_cast<long>(rep.discarded));
  if (pairs.size() < 2) {
    throw Error(ErrorKind::kUndefinedMetric, "ATE needs at least 2 common frames after discard");
  }
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::Matrix3Xd src(3, n);
  Eigen::Matrix3Xd dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = pairs[static_cast<std::size_t>(i)].second.first;
    dst.col(i) = pairs[static_cast<std::size_t>(i)].second.second;
  }
  if (align) {
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, true);
    src = (t.topLeftCorner<3, 3>() * src).colwise() + t.topRightCorner<3, 1>();
    rep.aligned = true;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = (src.col(i) - dst.col(i)).norm();
    rep.ids.push_back(pairs[static_cast<std::size_t>(i)].first);
    rep.errors.push_back(e);
    sum += e * e;
  }
  rep.rmse = std::sqrt(sum / static_cast<double>(n));
  return rep;
}

struct RepeatabilityReport {
  double ratio = 0.0;
  std::size_t redetected = 0;
  std::size_t expected = 0;  // warped points landing inside the image
};

/// Warps reference edge points with their depth and the ground-truth
/// relative pose (reference -> current). A point counts as expected when it
/// lands inside the current image and as re-detected when some current edge
/// pixel lies within `tol` pixels of it.
[[nodiscard]] inline RepeatabilityReport repeatability(const EdgeCloud& ref,
                                                       const BinaryImage& cur_edges,
                                                       const Pose& rel_pose,
                                                       const CameraIntrinsics& k,
                                                       double tol = 2.0) {
  if (!(tol > 0.0)) throw Error(ErrorKind::kConfig, "repeatability tolerance must be > 0");
  const int w = cur_edges.width();
  const int h = cur_edges.height();
  const int r = static_cast<int>(std::ceil(tol));
  RepeatabilityReport rep;
  for (const EdgePoint& p : ref.points) {
    if (p.isSupport()) continue;
    const Point3 pc = rel_pose * backProject(p.pixel, p.inverse_depth, k);
    if (!(pc.z() > kDefaultMinDepth)) continue;
    const Pixel q = project(pc, k);
    if (!(q.x() >= -0.5 && q.y() >= -0.5 && q.x() < w - 0.5 && q.y() < h - 0.5)) continue;
    ++rep.expected;
    const int cu = static_cast<int>(std::floor(q.x() + 0.5));
    const int cv = static_cast<int>(std::floor(q.y() + 0.5));
    bool hit = false;
    for (int v = std::max(0, cv - r); v <= std::min(h - 1, cv + r) && !hit; ++v) {
      for (int u = std::max(0, cu - r); u <= std::min(w - 1, cu + r); ++u) {
        if (cur_edges(u, v) && (Pixel(u, v) - q).norm() <= tol) {
          hit = true;
          break;
        }
      }
    }
    if (hit) ++rep.redetected;
  }
  if (rep.expected == 0) {
    throw Error(ErrorKind::kUndefinedMetric, "no reference edge reappears inside the image");
  }
  rep.ratio = static_cast<double>(rep.redetected) / static_cast<double>(rep.expected);
  return rep;
}

/// Every labeled pixel with valid depth as an edge point, unweighted.
[[nodiscard]] inline EdgeCloud allEdgePoints(const ClassifiedEdges& classes,
                                             const InverseDepthImage& depth) {
  if (!depth.sameShape(classes.width(), classes.height())) {
    throw Error(ErrorKind::kDimension, "edge labels and depth differ in size");
  }
  EdgeCloud c;
  c.class_count = classes.class_count;
  for (int v = 0; v < classes.height(); ++v) {
    for (int u = 0; u < classes.width(); ++u) {
      const ClassMask m = classes.masks(u, v);
      if (m && validInverseDepth(depth(u, v))) {
        c.points.push_back({Pixel(u, v), InverseDepth(depth(u, v)), m, 1.0, std::nullopt});
      }
    }
  }
  return c;
}

/// Distance between the camera centers implied by two reference -> current poses.
[[nodiscard]] inline double cameraCenterError(const Pose& est, const Pose& gt) {
  const Eigen::Vector3d ce = -(est.rotation().transpose() * est.translation());
  const Eigen::Vector3d cg = -(gt.rotation().transpose() * gt.translation());
  return (ce - cg).norm();
}

struct BasinPoint {
  double displacement = 0.0;
  double mean_error = 0.0;
  double converged_fraction = 0.0;
  bool converged = false;
};

struct BasinCurve {
  Association variant = Association::kSemantic;
  std::vector<BasinPoint> points;

  /// Largest displacement up to which every sampled displacement converged;
  /// 0 when even the smallest one fails.
  [[nodiscard]] double width() const {
    double w = 0.0;
    for (const auto& p : points) {
      if (!p.converged) break;
      w = p.displacement;
    }
    return w;
  }
};

struct BasinOptions {
  RegistrationConfig registration;  // pyramid_levels is ignored (single level)
  int directions = 8;
  double threshold = 0.05;  // meters of camera-center error
  double quorum = 0.9;
};

/// Offsets the ground-truth camera center by `displacement` along each of
/// `directions` azimuths in the camera x-z plane, registers from there at a
/// single resolution, and records the final camera-center error.
[[nodiscard]] inline std::vector<BasinCurve> convergenceBasin(
    const ReferenceFrame& ref, const ClassifiedEdges& cur_classes, const GrayImage& cur_gray,
    const Pose& gt_relative, const CameraIntrinsics& k, const std::vector<Association>& variants,
    const std::vector<double>& displacements, const BasinOptions& opt) {
  if (opt.directions < 1) throw Error(ErrorKind::kConfig, "need at least one direction");
  for (std::size_t i = 1; i < displacements.size(); ++i) {
    if (!(displacements[i] > displacements[i - 1])) {
      throw Error(ErrorKind::kConfig, "displacements must be strictly increasing");
    }
  }
  std::vector<BasinCurve> curves;
  const std::size_t nd = static_cast<std::size_t>(opt.directions);
  for (Association variant : variants) {
    RegistrationConfig cfg = opt.registration;
    cfg.association = variant;
    cfg.pyramid_levels = 1;
    cfg.threads = 1;
    const TargetFrame target = buildTarget(cur_classes, cur_gray, variant, opt.registration.threads);
    const std::size_t cells = displacements.size() * nd;
    std::vector<double> err(cells, 0.0);
    std::vector<std::uint8_t> ok(cells, 0);
    parallelChunks(cells, 1, opt.registration.threads,
                   [&](std::size_t c, std::size_t, std::size_t) {
                     const double delta = displacements[c / nd];
                     const double az = 2.0 * std::numbers::pi * static_cast<double>(c % nd) /
                                       static_cast<double>(nd);
                     const Eigen::Vector3d dir(std::cos(az), 0.0, std::sin(az));
                     // Right-multiplying by (I, -s) moves the camera center by +s.
                     const Pose init = gt_relative * Pose::fromTranslation(-delta * dir);
                     try {
                       const RegistrationResult r = registerEdges(ref, target, init, k, cfg);
                       err[c] = cameraCenterError(r.pose, gt_relative);
                     } catch (const Error&) {
                       err[c] = std::numeric_limits<double>::infinity();
                     }
                     ok[c] = err[c] < opt.threshold ? 1 : 0;
                   });
    BasinCurve curve;
    curve.variant = variant;
    for (std::size_t i = 0; i < displacements.size(); ++i) {
      BasinPoint p;
      p.displacement = displacements[i];
      std::size_t conv = 0;
      double sum = 0.0;
      std::size_t finite = 0;
      for (std::size_t j = 0; j < nd; ++j) {
        conv += ok[i * nd + j];
        if (std::isfinite(err[i * nd + j])) {
          sum += err[i * nd + j];
          ++finite;
        }
      }
      p.mean_error = finite ? sum / static_cast<double>(finite)
                            : std::numeric_limits<double>::infinity();
      p.converged_fraction = static_cast<double>(conv) / static_cast<double>(nd);
      p.converged = p.converged_fraction >= opt.quorum;
      curve.points.push_back(p);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

/// Evenly spaced displacements lo, lo + step, ..., up to hi.
[[nodiscard]] inline std::vector<double> displacementGrid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw Error(ErrorKind::kConfig, "invalid displacement grid");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

[[nodiscard]] inline const char* toString(Association a) {
  return a == Association::kSemantic ? "snnf" : "annf";
}

}  // namespace snnf
