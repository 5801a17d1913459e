#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "snnf/core_geometry.hpp"
#include "snnf/errors.hpp"
#include "snnf/image.hpp"
#include "snnf/nearest_neighbor_field.hpp"
#include "snnf/parallel.hpp"
#include "snnf/semantic_edge_map.hpp"

namespace snnf {

/// Semantic: each edge point matches only same-class edges (SNNF).
/// Global: class-blind matching against the union of all edges (ANNF).
enum class Association { kSemantic, kGlobal };

struct RegistrationConfig {
  double huber_gamma = 3.0;             // pixels
  int max_iterations = 50;
  double update_tolerance = 1e-6;       // norm of the se(3) increment
  int pyramid_levels = 3;
  double lambda_edge = 1.0;
  double lambda_photo = 0.25;
  bool point_to_tangent = true;
  double damping_init = 1e-4;
  double max_correspondence_dist = 30.0;  // pixels
  double photo_huber_gamma = 0.1;        // gradient-magnitude units
  double z_min = kDefaultMinDepth;
  Association association = Association::kSemantic;
  int threads = 1;

  void validate() const {
    if (!(huber_gamma > 0.0)) throw Error(ErrorKind::kConfig, "huber_gamma must be > 0");
    if (!(photo_huber_gamma > 0.0)) throw Error(ErrorKind::kConfig, "photo_huber_gamma must be > 0");
    if (pyramid_levels < 1) throw Error(ErrorKind::kConfig, "pyramid_levels must be >= 1");
    if (max_iterations < 1) throw Error(ErrorKind::kConfig, "max_iterations must be >= 1");
    if (!(lambda_edge >= 0.0) || !(lambda_photo >= 0.0) || !(lambda_edge + lambda_photo > 0.0)) {
      throw Error(ErrorKind::kConfig, "energy weights must be non-negative with a positive sum");
    }
    if (!(damping_init >= 0.0)) throw Error(ErrorKind::kConfig, "damping_init must be >= 0");
    if (!(max_correspondence_dist > 0.0)) {
      throw Error(ErrorKind::kConfig, "max_correspondence_dist must be > 0");
    }
    if (!(update_tolerance > 0.0)) throw Error(ErrorKind::kConfig, "update_tolerance must be > 0");
  }
};

inline constexpr double kMaxDamping = 1e7;

/// IRLS weight of the Huber cost: 1 inside the quadratic zone, gamma/|r| outside.
[[nodiscard]] inline double huberWeight(double r, double gamma) {
  const double a = std::abs(r);
  return a <= gamma ? 1.0 : gamma / a;
}

/// Huber cost in the squared-distance convention: r^2 for |r| <= gamma and
/// 2 gamma |r| - gamma^2 beyond, so that d(cost)/dr = 2 r * huberWeight(r).
[[nodiscard]] inline double huberCost(double r, double gamma) {
  const double a = std::abs(r);
  return a <= gamma ? a * a : 2.0 * gamma * a - gamma * gamma;
}

/// Reference keyframe: sampled points plus the image they came from.
struct ReferenceFrame {
  EdgeCloud cloud;
  GrayImage gray;
  GrayImage grad;  // gradient magnitude of gray

  [[nodiscard]] static ReferenceFrame make(EdgeCloud cloud, GrayImage gray) {
    GrayImage grad = gradientMagnitude(gray);
    return {std::move(cloud), std::move(gray), std::move(grad)};
  }
};

/// Current frame data at one resolution.
struct TargetFrame {
  SemanticFieldSet fields;
  GrayImage grad;
  NormalImage normals;
  Association association = Association::kSemantic;

  [[nodiscard]] int width() const { return grad.width(); }
  [[nodiscard]] int height() const { return grad.height(); }
};

[[nodiscard]] inline TargetFrame buildTarget(const ClassifiedEdges& classes, const GrayImage& gray,
                                             Association association, int threads = 1) {
  if (!gray.sameShape(classes.width(), classes.height())) {
    throw Error(ErrorKind::kDimension, "edge labels and image differ in size");
  }
  TargetFrame t;
  t.association = association;
  if (association == Association::kGlobal) {
    t.fields = SemanticFieldSet({buildAnnf(classes)});
  } else {
    t.fields = buildSnnf(classes, threads);
  }
  t.grad = gradientMagnitude(gray);
  t.normals = edgeNormals(gray);
  return t;
}

enum class DropReason { kNone, kBehindCamera, kOutOfBounds, kNoMatch, kTooFar };

/// One edge term: a (point, class) pair. Point-to-point terms have two rows,
/// point-to-tangent terms one.
struct EdgeResidual {
  int class_id = 0;
  DropReason dropped = DropReason::kNone;
  Pixel warped = Pixel::Zero();
  Pixel match = Pixel::Zero();
  Eigen::Vector2d normal = Eigen::Vector2d::UnitX();
  double distance = 0.0;  // |warped - match|
  int rows = 0;
  Eigen::Vector2d residual = Eigen::Vector2d::Zero();
  Matrix26 jacobian = Matrix26::Zero();

  /// Scalar magnitude the Huber norm acts on.
  [[nodiscard]] double magnitude() const {
    return rows == 2 ? residual.norm() : std::abs(residual.x());
  }
};

struct PhotoResidual {
  double residual = 0.0;
  Matrix16 jacobian = Matrix16::Zero();
};

namespace detail {

inline Eigen::Vector2d matchNormal(const TargetFrame& target, const NearestMatch& m,
                                   const Pixel& warped) {
  const Eigen::Vector2f n = target.normals[static_cast<std::size_t>(m.seed_index)];
  if (n.squaredNorm() > 0.0f) return n.cast<double>().normalized();
  const Eigen::Vector2d d = warped - m.seed;
  if (d.squaredNorm() > 0.0) return d.normalized();
  return Eigen::Vector2d::UnitX();
}

/// Fills residual rows and Jacobian for a frozen match.
inline void frozenEdgeRows(EdgeResidual& e, const Point3& pc, const CameraIntrinsics& k,
                           bool point_to_tangent, bool with_jacobian) {
  const Eigen::Vector2d diff = e.warped - e.match;
  if (point_to_tangent) {
    e.rows = 1;
    e.residual = Eigen::Vector2d(e.normal.dot(diff), 0.0);
    if (with_jacobian) {
      e.jacobian.setZero();
      e.jacobian.row(0) = e.normal.transpose() * warpJacobianAt(pc, k);
    }
  } else {
    e.rows = 2;
    e.residual = diff;
    if (with_jacobian) e.jacobian = warpJacobianAt(pc, k);
  }
}

inline int fieldFor(const TargetFrame& target, int cls) {
  return target.association == Association::kGlobal ? 0 : cls;
}

}  // namespace detail

/// Edge terms of one point: one entry per set class bit (all bits collapse
/// to a single term under global association). Dropped terms are reported
/// with their reason and carry no rows.
[[nodiscard]] inline std::vector<EdgeResidual> edgeResiduals(const EdgePoint& point,
                                                             const Pose& pose,
                                                             const CameraIntrinsics& k,
                                                             const TargetFrame& target,
                                                             const RegistrationConfig& cfg) {
  std::vector<EdgeResidual> out;
  if (point.class_mask == 0) return out;
  const Point3 pc = pose * backProject(point.pixel, point.inverse_depth, k);
  std::vector<int> classes;
  if (target.association == Association::kGlobal) {
    classes.push_back(0);
  } else {
    for (ClassMask m = point.class_mask; m; m &= m - 1) classes.push_back(std::countr_zero(m));
  }
  for (int cls : classes) {
    EdgeResidual e;
    e.class_id = cls;
    if (!(pc.z() > cfg.z_min)) {
      e.dropped = DropReason::kBehindCamera;
      out.push_back(e);
      continue;
    }
    e.warped = project(pc, k, cfg.z_min);
    const int f = detail::fieldFor(target, cls);
    if (f >= target.fields.classCount() || target.fields.isEmpty(f)) {
      e.dropped = DropReason::kNoMatch;
      out.push_back(e);
      continue;
    }
    const auto m = target.fields.field(f).tryLookup(e.warped);
    if (!m) {
      e.dropped = DropReason::kOutOfBounds;
      out.push_back(e);
      continue;
    }
    e.match = m->seed;
    e.distance = m->distance;
    if (m->distance > cfg.max_correspondence_dist) {
      e.dropped = DropReason::kTooFar;
      out.push_back(e);
      continue;
    }
    e.normal = detail::matchNormal(target, *m, e.warped);
    detail::frozenEdgeRows(e, pc, k, cfg.point_to_tangent, true);
    out.push_back(e);
  }
  return out;
}

/// r = G_cur(warp(p)) - G_ref(p) with bilinear sampling; nullopt when the
/// warp leaves the bilinear-valid interior or the point is behind the camera.
[[nodiscard]] inline std::optional<PhotoResidual> photoResidual(
    const GrayImage& grad_ref, const GrayImage& grad_cur, const EdgePoint& point,
    const Pose& pose, const CameraIntrinsics& k, double z_min = kDefaultMinDepth) {
  const auto ref = sampleBilinear(grad_ref, point.pixel.x(), point.pixel.y());
  if (!ref) return std::nullopt;
  const Point3 pc = pose * backProject(point.pixel, point.inverse_depth, k);
  if (!(pc.z() > z_min)) return std::nullopt;
  const Pixel w = project(pc, k, z_min);
  const auto cur = sampleBilinear(grad_cur, w.x(), w.y());
  if (!cur) return std::nullopt;
  PhotoResidual r;
  r.residual = cur->value - ref->value;
  r.jacobian = cur->gradient.transpose() * warpJacobianAt(pc, k);
  return r;
}

struct EnergyBreakdown {
  double total = 0.0;
  double edge = 0.0;   // unweighted by lambda_edge
  double photo = 0.0;  // unweighted by lambda_photo
  std::size_t edge_terms = 0;
  std::size_t dropped_edge_terms = 0;
  std::size_t inlier_edge_terms = 0;
  std::size_t photo_terms = 0;
  std::size_t dropped_photo_terms = 0;

  [[nodiscard]] double inlierFraction() const {
    return edge_terms == 0 ? 0.0 : static_cast<double>(inlier_edge_terms) / edge_terms;
  }
};

/// One damped Gauss-Newton attempt on frozen correspondences.
struct StepRecord {
  int iteration = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double damping = 0.0;
  double update_norm = 0.0;
  bool accepted = false;
};

struct LevelDiagnostics {
  int level = 0;
  int iterations = 0;
  bool converged = false;
  double final_energy = 0.0;
  double inlier_fraction = 0.0;
  EnergyBreakdown energy;
  std::vector<StepRecord> steps;

  /// Frozen-correspondence energy never increased over an accepted step.
  [[nodiscard]] bool monotone() const {
    return std::all_of(steps.begin(), steps.end(), [](const StepRecord& s) {
      return !s.accepted || s.energy_after <= s.energy_before;
    });
  }
};

struct RegistrationResult {
  Pose pose;
  double final_energy = 0.0;
  int iterations_used = 0;
  double inlier_fraction = 0.0;
  bool converged = false;
  double final_update_norm = 0.0;
  std::vector<LevelDiagnostics> levels;  // coarsest first

  [[nodiscard]] bool monotone() const {
    return std::all_of(levels.begin(), levels.end(),
                       [](const LevelDiagnostics& l) { return l.monotone(); });
  }
};

namespace detail {

struct PreparedPoint {
  Point3 x;      // reference-frame 3D point
  Pixel pixel;   // at the current level
  ClassMask mask;
  double weight;
  double ref_grad;  // G_ref at the point; NaN when unavailable
};

struct FrozenTerm {
  std::uint32_t point;
  DropReason dropped;
  Pixel match;
  Eigen::Vector2d normal;
};

struct Accumulator {
  Matrix6 h = Matrix6::Zero();
  Vector6 b = Vector6::Zero();
  double edge = 0.0;
  double photo = 0.0;
  std::size_t rows = 0;
  bool finite = true;
  EnergyBreakdown stats;

  void add(const Accumulator& o) {
    h += o.h;
    b += o.b;
    edge += o.edge;
    photo += o.photo;
    rows += o.rows;
    finite = finite && o.finite;
    stats.edge_terms += o.stats.edge_terms;
    stats.dropped_edge_terms += o.stats.dropped_edge_terms;
    stats.inlier_edge_terms += o.stats.inlier_edge_terms;
    stats.photo_terms += o.stats.photo_terms;
    stats.dropped_photo_terms += o.stats.dropped_photo_terms;
  }
};

inline constexpr std::size_t kChunk = 256;

/// Registration problem at one pyramid level.
class LevelProblem {
 public:
  LevelProblem(const std::vector<PreparedPoint>& points, const TargetFrame& target,
               const CameraIntrinsics& k, const RegistrationConfig& cfg)
      : points_(points), target_(target), k_(k), cfg_(cfg) {}

  /// Fresh nearest-neighbor association at `pose`.
  [[nodiscard]] std::vector<std::vector<FrozenTerm>> associate(const Pose& pose) const {
    std::vector<std::vector<FrozenTerm>> chunks(chunkCount(points_.size(), kChunk));
    parallelChunks(points_.size(), kChunk, cfg_.threads,
                   [&](std::size_t c, std::size_t begin, std::size_t end) {
                     auto& out = chunks[c];
                     for (std::size_t i = begin; i < end; ++i) associatePoint(pose, i, out);
                   });
    return chunks;
  }

  /// Energy (and optionally normal equations) with correspondences frozen.
  [[nodiscard]] Accumulator evaluate(const Pose& pose,
                                     const std::vector<std::vector<FrozenTerm>>& frozen,
                                     bool with_system) const {
    const std::size_t chunks = chunkCount(points_.size(), kChunk);
    std::vector<Accumulator> partial(chunks);
    parallelChunks(points_.size(), kChunk, cfg_.threads,
                   [&](std::size_t c, std::size_t begin, std::size_t end) {
                     evaluateChunk(pose, frozen[c], begin, end, with_system, partial[c]);
                   });
    Accumulator total;
    for (const auto& p : partial) total.add(p);
    return total;
  }

  [[nodiscard]] double totalEnergy(const Accumulator& a) const {
    return cfg_.lambda_edge * a.edge + cfg_.lambda_photo * a.photo;
  }

 private:
  void associatePoint(const Pose& pose, std::size_t i, std::vector<FrozenTerm>& out) const {
    const PreparedPoint& p = points_[i];
    if (p.mask == 0) return;
    const Point3 pc = pose * p.x;
    const bool in_front = pc.z() > cfg_.z_min;
    const Pixel w = in_front ? project(pc, k_, cfg_.z_min) : Pixel::Zero();
    const auto one = [&](int cls) {
      FrozenTerm t{static_cast<std::uint32_t>(i), DropReason::kNone, Pixel::Zero(),
                   Eigen::Vector2d::UnitX()};
      if (!in_front) {
        t.dropped = DropReason::kBehindCamera;
      } else if (cls >= target_.fields.classCount() || target_.fields.isEmpty(cls)) {
        t.dropped = DropReason::kNoMatch;
      } else if (auto m = target_.fields.field(cls).tryLookup(w); !m) {
        t.dropped = DropReason::kOutOfBounds;
      } else if (m->distance > cfg_.max_correspondence_dist) {
        t.dropped = DropReason::kTooFar;
      } else {
        t.match = m->seed;
        t.normal = matchNormal(target_, *m, w);
      }
      out.push_back(t);
    };
    if (target_.association == Association::kGlobal) {
      one(0);
    } else {
      for (ClassMask m = p.mask; m; m &= m - 1) one(std::countr_zero(m));
    }
  }

  void evaluateChunk(const Pose& pose, const std::vector<FrozenTerm>& terms, std::size_t begin,
                     std::size_t end, bool with_system, Accumulator& acc) const {
    const double gamma = cfg_.huber_gamma;
    const double dropped_cost = huberCost(cfg_.max_correspondence_dist, gamma);
    if (cfg_.lambda_edge > 0.0) {
      for (const FrozenTerm& t : terms) {
        const PreparedPoint& p = points_[t.point];
        ++acc.stats.edge_terms;
        if (t.dropped != DropReason::kNone) {
          ++acc.stats.dropped_edge_terms;
          acc.edge += p.weight * dropped_cost;
          continue;
        }
        const Point3 pc = pose * p.x;
        if (!(pc.z() > cfg_.z_min)) {
          acc.finite = false;
          acc.edge = std::numeric_limits<double>::infinity();
          continue;
        }
        EdgeResidual e;
        e.warped = project(pc, k_, cfg_.z_min);
        e.match = t.match;
        e.normal = t.normal;
        detail::frozenEdgeRows(e, pc, k_, cfg_.point_to_tangent, with_system);
        const double mag = e.magnitude();
        if (mag <= gamma) ++acc.stats.inlier_edge_terms;
        acc.edge += p.weight * huberCost(mag, gamma);
        if (with_system) {
          const double w = cfg_.lambda_edge * p.weight * huberWeight(mag, gamma);
          const auto j = e.jacobian.topRows(e.rows);
          const auto r = e.residual.head(e.rows);
          acc.h.noalias() += w * j.transpose() * j;
          acc.b.noalias() += w * j.transpose() * r;
          acc.rows += static_cast<std::size_t>(e.rows);
        }
      }
    }
    if (cfg_.lambda_photo > 0.0) {
      const double pg = cfg_.photo_huber_gamma;
      const double photo_dropped = huberCost(pg, pg);
      for (std::size_t i = begin; i < end; ++i) {
        const PreparedPoint& p = points_[i];
        ++acc.stats.photo_terms;
        const Point3 pc = pose * p.x;
        std::optional<BilinearSample> cur;
        Pixel w = Pixel::Zero();
        if (pc.z() > cfg_.z_min && std::isfinite(p.ref_grad)) {
          w = project(pc, k_, cfg_.z_min);
          cur = sampleBilinear(target_.grad, w.x(), w.y());
        }
        if (!cur) {
          ++acc.stats.dropped_photo_terms;
          acc.photo += p.weight * photo_dropped;
          continue;
        }
        const double r = cur->value - p.ref_grad;
        acc.photo += p.weight * huberCost(r, pg);
        if (with_system) {
          const Matrix16 j = cur->gradient.transpose() * warpJacobianAt(pc, k_);
          const double wt = cfg_.lambda_photo * p.weight * huberWeight(r, pg);
          acc.h.noalias() += wt * j.transpose() * j;
          acc.b.noalias() += wt * j.transpose() * r;
          acc.rows += 1;
        }
      }
    }
  }

  const std::vector<PreparedPoint>& points_;
  const TargetFrame& target_;
  CameraIntrinsics k_;
  const RegistrationConfig& cfg_;
};

inline std::vector<PreparedPoint> preparePoints(const EdgeCloud& cloud, const GrayImage& ref_grad,
                                                const CameraIntrinsics& k0, int level) {
  const double s = std::ldexp(1.0, -level);
  std::vector<PreparedPoint> out;
  out.reserve(cloud.size());
  for (const EdgePoint& p : cloud.points) {
    PreparedPoint q;
    q.x = backProject(p.pixel, p.inverse_depth, k0);
    q.pixel = (p.pixel.array() + 0.5) * s - 0.5;
    q.mask = p.class_mask;
    q.weight = p.weight;
    const auto g = sampleBilinear(ref_grad, q.pixel.x(), q.pixel.y());
    q.ref_grad = g ? g->value : std::numeric_limits<double>::quiet_NaN();
    out.push_back(q);
  }
  return out;
}

inline LevelDiagnostics solveLevel(const LevelProblem& problem, Pose& pose,
                                   const RegistrationConfig& cfg, int level,
                                   double& last_update_norm) {
  LevelDiagnostics diag;
  diag.level = level;
  double damping = cfg.damping_init;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    diag.iterations = it;
    const auto frozen = problem.associate(pose);
    const Accumulator lin = problem.evaluate(pose, frozen, true);
    const double e0 = problem.totalEnergy(lin);
    if (!lin.finite || !std::isfinite(e0)) throw Error(ErrorKind::kNumeric, "non-finite energy");
    if (lin.rows < 6) {
      throw Error(ErrorKind::kRankDeficient, "fewer than 6 usable residual rows");
    }
    Vector6 scale = lin.h.diagonal();
    const double floor = 1e-12 * std::max(scale.maxCoeff(), 1e-300);
    scale = scale.cwiseMax(floor);

    bool accepted = false;
    double norm = 0.0;
    for (;;) {
      Matrix6 a = lin.h;
      a.diagonal() += damping * scale;
      a.diagonal().array() += floor;
      const Vector6 delta = -a.ldlt().solve(lin.b);
      if (!delta.allFinite()) throw Error(ErrorKind::kNumeric, "non-finite update");
      norm = delta.norm();
      const Pose candidate = se3Exp(delta) * pose;
      const double e1 = problem.totalEnergy(problem.evaluate(candidate, frozen, false));
      StepRecord rec{it, e0, e1, damping, norm, false};
      if (std::isfinite(e1) && e1 <= e0) {
        rec.accepted = true;
        diag.steps.push_back(rec);
        assert(rec.energy_after <= rec.energy_before);
        pose = candidate;
        damping = std::max(cfg.damping_init, damping * 0.1);
        accepted = true;
        break;
      }
      diag.steps.push_back(rec);
      damping = std::max(damping * 10.0, 1e-6);
      if (damping > kMaxDamping) break;
    }
    last_update_norm = norm;
    if (norm < cfg.update_tolerance || !accepted) {
      diag.converged = norm < cfg.update_tolerance;
      break;
    }
  }
  const auto frozen = problem.associate(pose);
  const Accumulator fin = problem.evaluate(pose, frozen, false);
  diag.final_energy = problem.totalEnergy(fin);
  diag.energy = fin.stats;
  diag.energy.edge = fin.edge;
  diag.energy.photo = fin.photo;
  diag.energy.total = diag.final_energy;
  diag.inlier_fraction = fin.stats.inlierFraction();
  return diag;
}

inline EdgeCloud cloudFor(const EdgeCloud& cloud, Association a) {
  return a == Association::kGlobal ? cloud.classBlind() : cloud;
}

}  // namespace detail

/// Edge (and gradient-magnitude photometric) energy at `pose` with a fresh
/// nearest-neighbor association. Costs use the squared-distance Huber
/// convention of huberCost(); dropped edge terms cost
/// huberCost(max_correspondence_dist), dropped photometric terms
/// huberCost(photo_huber_gamma).
[[nodiscard]] inline EnergyBreakdown evaluateEnergy(const EdgeCloud& cloud,
                                                    const GrayImage& ref_grad,
                                                    const TargetFrame& target, const Pose& pose,
                                                    const CameraIntrinsics& k,
                                                    const RegistrationConfig& cfg) {
  const EdgeCloud c = detail::cloudFor(cloud, target.association);
  const auto points = detail::preparePoints(c, ref_grad, k, 0);
  const detail::LevelProblem problem(points, target, k, cfg);
  const auto frozen = problem.associate(pose);
  const detail::Accumulator acc = problem.evaluate(pose, frozen, false);
  EnergyBreakdown e = acc.stats;
  e.edge = acc.edge;
  e.photo = acc.photo;
  e.total = problem.totalEnergy(acc);
  return e;
}

/// ICP-style alternation at a single resolution: associate, freeze, take one
/// damped Gauss-Newton step that must not increase the frozen energy, repeat
/// until the update norm drops below tolerance or max_iterations is reached.
[[nodiscard]] inline RegistrationResult registerEdges(const ReferenceFrame& ref,
                                                      const TargetFrame& target,
                                                      const Pose& init,
                                                      const CameraIntrinsics& k,
                                                      const RegistrationConfig& cfg) {
  cfg.validate();
  if (ref.cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "registration needs points");
  const EdgeCloud cloud = detail::cloudFor(ref.cloud, target.association);
  const auto points = detail::preparePoints(cloud, ref.grad, k, 0);
  const detail::LevelProblem problem(points, target, k, cfg);
  RegistrationResult result;
  result.pose = init;
  LevelDiagnostics d = detail::solveLevel(problem, result.pose, cfg, 0, result.final_update_norm);
  result.final_energy = d.final_energy;
  result.iterations_used = d.iterations;
  result.inlier_fraction = d.inlier_fraction;
  result.converged = d.converged;
  result.levels.push_back(std::move(d));
  return result;
}

/// Coarse-to-fine registration over factor-2 levels. Level L downsamples
/// seeds and images by 2^L and scales the intrinsics; each level starts from
/// the previous level's pose. With pyramid_levels == 1 this is registerEdges.
[[nodiscard]] inline RegistrationResult registerPyramid(const ReferenceFrame& ref,
                                                        const ClassifiedEdges& cur_classes,
                                                        const GrayImage& cur_gray,
                                                        const Pose& init,
                                                        const CameraIntrinsics& k,
                                                        const RegistrationConfig& cfg) {
  cfg.validate();
  if (ref.cloud.empty()) throw Error(ErrorKind::kEmptyCloud, "registration needs points");
  const EdgeCloud cloud = detail::cloudFor(ref.cloud, cfg.association);
  // Coarsest usable level keeps at least 16x16 pixels.
  int levels = cfg.pyramid_levels;
  while (levels > 1 && ((cur_gray.width() >> (levels - 1)) < 16 ||
                        (cur_gray.height() >> (levels - 1)) < 16)) {
    --levels;
  }
  std::vector<GrayImage> cur_grays{cur_gray};
  std::vector<GrayImage> ref_grays{ref.gray};
  for (int l = 1; l < levels; ++l) {
    cur_grays.push_back(downsample2x(cur_grays.back()));
    ref_grays.push_back(downsample2x(ref_grays.back()));
  }
  RegistrationResult result;
  result.pose = init;
  for (int level = levels - 1; level >= 0; --level) {
    const TargetFrame target =
        buildTarget(cur_classes.downsampled(level), cur_grays[level], cfg.association, cfg.threads);
    const GrayImage ref_grad = level == 0 ? ref.grad : gradientMagnitude(ref_grays[level]);
    const auto points = detail::preparePoints(cloud, ref_grad, k, level);
    const CameraIntrinsics kl = k.atLevel(level);
    const detail::LevelProblem problem(points, target, kl, cfg);
    LevelDiagnostics d =
        detail::solveLevel(problem, result.pose, cfg, level, result.final_update_norm);
    result.iterations_used += d.iterations;
    if (level == 0) {
      result.final_energy = d.final_energy;
      result.inlier_fraction = d.inlier_fraction;
      result.converged = d.converged;
    }
    result.levels.push_back(std::move(d));
  }
  return result;
}

/// Mean image displacement of the edge points under `pose`, in pixels.
[[nodiscard]] inline double meanEdgeFlow(const EdgeCloud& cloud, const Pose& pose,
                                         const CameraIntrinsics& k,
                                         double z_min = kDefaultMinDepth) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const EdgePoint& p : cloud.points) {
    if (p.isSupport()) continue;
    const Point3 pc = pose * backProject(p.pixel, p.inverse_depth, k);
    if (!(pc.z() > z_min)) continue;
    sum += (project(pc, k, z_min) - p.pixel).norm();
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace snnf
