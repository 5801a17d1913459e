#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snnf/core_geometry.hpp"
#include "snnf/edge_registration.hpp"
#include "snnf/errors.hpp"
#include "snnf/image.hpp"
#include "snnf/semantic_edge_map.hpp"
#include "snnf/trajectory.hpp"

namespace snnf {

struct FrameInput {
  int id = 0;
  GrayImage gray;
  SemanticEdgeMap edges;
  InverseDepthImage inverse_depth;
  std::optional<Pose> ground_truth;
};

struct TrackerConfig {
  RegistrationConfig registration;
  double keyframe_flow_px = 20.0;
  double keyframe_inlier = 0.6;
  std::size_t edge_budget = 3000;
  bool use_support = true;
  SupportSamplingOptions support;
  double tau = 0.5;
  EdgeWeighting weighting = EdgeWeighting::kUniform;
  int scale_interval = 200;
  std::uint64_t seed = 0;

  void validate() const {
    registration.validate();
    if (!(keyframe_flow_px > 0.0)) throw Error(ErrorKind::kConfig, "keyframe_flow_px must be > 0");
    if (!(keyframe_inlier > 0.0 && keyframe_inlier <= 1.0)) {
      throw Error(ErrorKind::kConfig, "keyframe_inlier must be in (0, 1]");
    }
    if (edge_budget < 1) throw Error(ErrorKind::kConfig, "edge_budget must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::kConfig, "tau must be in (0, 1)");
    if (scale_interval < 1) throw Error(ErrorKind::kConfig, "scale_interval must be >= 1");
    if (support.target_total < support.min_support) {
      throw Error(ErrorKind::kConfig, "support target must be >= minimum support");
    }
  }
};

/// Promote the current frame to keyframe when edges moved more than the flow
/// threshold or too few edge terms are inliers (both strict).
[[nodiscard]] inline bool keyframeDecision(const RegistrationResult& result, double mean_edge_flow,
                                           const TrackerConfig& cfg) {
  return mean_edge_flow > cfg.keyframe_flow_px || result.inlier_fraction < cfg.keyframe_inlier;
}

struct FrameDiagnostics {
  int id = 0;
  bool lost = false;
  bool keyframe = false;
  int keyframe_id = 0;
  double mean_edge_flow = 0.0;
  double inlier_fraction = 1.0;
  int iterations = 0;
  bool converged = true;
  bool monotone = true;  // no accepted step raised the energy
  Pose relative;  // keyframe -> frame
  std::string error;
};

struct TrackingResult {
  Trajectory trajectory;
  std::vector<FrameDiagnostics> frames;
};

/// Samples the registration cloud of a keyframe: stratified edge points plus
/// photometric-only supportive pixels.
[[nodiscard]] inline ReferenceFrame makeKeyframe(const FrameInput& frame,
                                                 const ClassifiedEdges& classes,
                                                 const TrackerConfig& cfg) {
  EdgeSamplingOptions eo;
  eo.budget = cfg.edge_budget;
  eo.tau = cfg.tau;
  eo.seed = cfg.seed ^ static_cast<std::uint64_t>(frame.id);
  eo.weighting = cfg.weighting;
  eo.frame_id = frame.id;
  EdgeCloud cloud = sampleEdgeCloud(classes, frame.inverse_depth, frame.gray, eo);
  if (cfg.use_support) {
    SupportSamplingOptions so = cfg.support;
    so.seed = eo.seed;
    const GrayImage grad = gradientMagnitude(frame.gray);
    auto support =
        sampleSupportPixels(grad, frame.inverse_depth, cloud.size(), so, &classes.masks);
    cloud.points.insert(cloud.points.end(), support.begin(), support.end());
  }
  return ReferenceFrame::make(std::move(cloud), frame.gray);
}

/// Frame-to-keyframe tracker. Frames must arrive with increasing ids; the
/// first frame defines the world origin.
class SequenceTracker {
 public:
  SequenceTracker(const CameraIntrinsics& k, TrackerConfig cfg) : k_(k), cfg_(std::move(cfg)) {
    if (!k_.valid()) throw Error(ErrorKind::kConfig, "invalid intrinsics");
    cfg_.validate();
  }

  const FrameDiagnostics& process(const FrameInput& frame) {
    if (!result_.frames.empty() && frame.id <= result_.frames.back().id) {
      throw Error(ErrorKind::kConfig, "frame ids must increase");
    }
    frame.edges.validate();
    if (!frame.gray.sameShape(frame.edges.width, frame.edges.height) ||
        !frame.inverse_depth.sameShape(frame.gray)) {
      throw Error(ErrorKind::kDimension, "frame inputs differ in size");
    }
    const ClassifiedEdges classes = classifyEdges(frame.edges, cfg_.tau);
    FrameDiagnostics d;
    d.id = frame.id;

    if (!keyframe_) {
      promote(frame, classes, Pose::identity());
      d.keyframe = true;
      d.keyframe_id = frame.id;
      return record(frame.id, Pose::identity(), d);
    }

    const Pose init = velocity_ * prev_relative_;
    d.keyframe_id = keyframe_id_;
    try {
      const RegistrationResult r =
          registerPyramid(*keyframe_, classes, frame.gray, init, k_, cfg_.registration);
      d.relative = r.pose;
      d.iterations = r.iterations_used;
      d.monotone = r.monotone();
      d.converged = r.converged;
      d.inlier_fraction = r.inlier_fraction;
      d.mean_edge_flow = meanEdgeFlow(keyframe_->cloud, r.pose, k_);
      const Pose world = keyframe_world_ * r.pose.inverse();
      velocity_ = r.pose * prev_relative_.inverse();
      prev_relative_ = r.pose;
      last_good_ = world;
      if (keyframeDecision(r, d.mean_edge_flow, cfg_)) {
        promote(frame, classes, world);
        d.keyframe = true;
      }
      return record(frame.id, world, d);
    } catch (const Error& e) {
      // Re-initialize from the last good pose with this frame as keyframe.
      d.lost = true;
      d.converged = false;
      d.error = e.what();
      velocity_ = Pose::identity();
      try {
        promote(frame, classes, last_good_);
        d.keyframe = true;
      } catch (const Error&) {
      }
      return record(frame.id, last_good_, d);
    }
  }

  [[nodiscard]] const TrackingResult& result() const noexcept { return result_; }

 private:
  void promote(const FrameInput& frame, const ClassifiedEdges& classes, const Pose& world) {
    keyframe_ = makeKeyframe(frame, classes, cfg_);
    keyframe_id_ = frame.id;
    keyframe_world_ = world;
    last_good_ = world;
    prev_relative_ = Pose::identity();
  }

  const FrameDiagnostics& record(int id, const Pose& world, FrameDiagnostics d) {
    result_.trajectory.push(id, world);
    result_.frames.push_back(std::move(d));
    return result_.frames.back();
  }

  CameraIntrinsics k_;
  TrackerConfig cfg_;
  std::optional<ReferenceFrame> keyframe_;
  int keyframe_id_ = 0;
  Pose keyframe_world_;
  Pose prev_relative_;
  Pose velocity_;
  Pose last_good_;
  TrackingResult result_;
};

[[nodiscard]] inline TrackingResult trackSequence(const std::vector<FrameInput>& frames,
                                                  const CameraIntrinsics& k,
                                                  const TrackerConfig& cfg) {
  if (frames.size() < 2) throw Error(ErrorKind::kConfig, "tracking needs at least two frames");
  SequenceTracker tracker(k, cfg);
  for (const auto& f : frames) tracker.process(f);
  return tracker.result();
}

/// Rescales translations window by window so each window's path length
/// matches ground truth. Windows are [w*I, (w+1)*I] and share boundary
/// frames; every window is re-anchored at its (already corrected) first
/// position. Windows with zero estimated length keep scale 1 and are listed
/// in `warnings`.
[[nodiscard]] inline Trajectory recoverScale(const Trajectory& est, const Trajectory& gt,
                                             int interval,
                                             std::vector<std::string>* warnings = nullptr) {
  if (interval < 1) throw Error(ErrorKind::kConfig, "scale interval must be >= 1");
  if (est.size() != gt.size()) throw Error(ErrorKind::kDimension, "trajectory lengths differ");
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (est.entries[i].id != gt.entries[i].id) {
      throw Error(ErrorKind::kDimension, "trajectory frame ids differ");
    }
  }
  Trajectory out = est;
  const std::size_t n = est.size();
  const std::size_t step = static_cast<std::size_t>(interval);
  for (std::size_t a = 0; a + 1 < n; a += step) {
    const std::size_t b = std::min(a + step, n - 1);
    double le = 0.0;
    double lg = 0.0;
    for (std::size_t j = a + 1; j <= b; ++j) {
      le += (est.entries[j].pose.translation() - est.entries[j - 1].pose.translation()).norm();
      lg += (gt.entries[j].pose.translation() - gt.entries[j - 1].pose.translation()).norm();
    }
    double s = 1.0;
    if (le > 0.0) {
      s = lg / le;
    } else if (warnings) {
      warnings->push_back("scale window starting at frame " + std::to_string(est.entries[a].id) +
                          " has zero estimated path length; skipped");
    }
    const Eigen::Vector3d anchor_est = est.entries[a].pose.translation();
    const Eigen::Vector3d anchor_out = out.entries[a].pose.translation();
    for (std::size_t j = a + 1; j <= b; ++j) {
      const Pose& p = est.entries[j].pose;
      out.entries[j].pose = Pose(p.rotation(), anchor_out + s * (p.translation() - anchor_est));
    }
  }
  return out;
}

}  // namespace snnf
