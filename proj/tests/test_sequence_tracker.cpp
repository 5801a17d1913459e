#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace snnf;
using snnf::oracle::defaultIntrinsics;
using snnf::oracle::kHeight;
using snnf::oracle::kWidth;

namespace {

std::vector<FrameInput> renderSequence(const SceneModel& scene, const std::vector<Pose>& poses) {
  std::vector<FrameInput> frames;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const RenderOutput r = renderView(scene, poses[i], defaultIntrinsics(), kWidth, kHeight);
    frames.push_back({static_cast<int>(i), r.gray, r.edges, r.inverse_depth, poses[i]});
  }
  return frames;
}

struct DollyRun {
  std::vector<Pose> gt;
  std::vector<FrameInput> frames;
  TrackingResult result;
};

const DollyRun& dollyRun() {
  static const DollyRun run = [] {
    DollyRun d;
    d.gt = generateTrajectory(TrajectoryKind::kDolly, 20);
    d.frames = renderSequence(buildScene(SceneKind::kCubeGrid, 4), d.gt);
    d.result = trackSequence(d.frames, defaultIntrinsics(), {});
    return d;
  }();
  return run;
}

}  // namespace

TEST(KeyframeDecision, StrictThresholds) {
  TrackerConfig cfg;
  RegistrationResult r;
  r.inlier_fraction = 0.6;
  EXPECT_FALSE(keyframeDecision(r, 20.0, cfg));
  EXPECT_TRUE(keyframeDecision(r, 20.0001, cfg));
  r.inlier_fraction = 0.5999;
  EXPECT_TRUE(keyframeDecision(r, 1.0, cfg));
}

TEST(TrackerConfig, Validation) {
  TrackerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.keyframe_inlier = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.support.min_support = cfg.support.target_total + 1;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(SequenceTracker(CameraIntrinsics{0, 1, 0, 0}, {}), Error);
}

TEST(SequenceTracker, DollyWithinOneCentimeter) {
  const DollyRun& d = dollyRun();
  ASSERT_EQ(d.result.trajectory.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& e = d.result.trajectory.entries[i];
    EXPECT_EQ(e.id, static_cast<int>(i));
    EXPECT_LT((e.pose.translation() - d.gt[i].translation()).norm(), 0.01) << i;
    EXPECT_FALSE(d.result.frames[i].lost);
    EXPECT_TRUE(d.result.frames[i].monotone);
  }
  EXPECT_TRUE(d.result.frames[0].keyframe);
  // 0.2 m steps through a scene 5-20 m deep eventually exceed the flow limit.
  int keyframes = 0;
  for (const auto& f : d.result.frames) keyframes += f.keyframe ? 1 : 0;
  EXPECT_GT(keyframes, 1);
}

TEST(SequenceTracker, RepeatedRunsAreBitIdentical) {
  const DollyRun& d = dollyRun();
  const TrackingResult again = trackSequence(d.frames, defaultIntrinsics(), {});
  EXPECT_EQ(again.trajectory, d.result.trajectory);
}

TEST(SequenceTracker, StaticSequenceStaysAtIdentity) {
  const std::vector<Pose> poses(5, Pose());
  const auto frames = renderSequence(buildScene(SceneKind::kCubeGrid, 2), poses);
  const TrackingResult r = trackSequence(frames, defaultIntrinsics(), {});
  for (const auto& e : r.trajectory.entries) {
    EXPECT_LT(e.pose.translation().norm(), 1e-6);
    EXPECT_LT(rotationAngle(e.pose.rotation()), 1e-6);
  }
  for (std::size_t i = 1; i < r.frames.size(); ++i) EXPECT_FALSE(r.frames[i].keyframe);
}

TEST(SequenceTracker, LostFrameKeepsLastGoodPose) {
  const SceneModel scene = buildScene(SceneKind::kCubeGrid, 4);
  auto frames = renderSequence(scene, generateTrajectory(TrajectoryKind::kDolly, 4, {0.05, 0.0}));
  // Frame 2 has no edges at all.
  for (auto& p : frames[2].edges.planes) p = GrayImage(kWidth, kHeight);
  SequenceTracker tracker(defaultIntrinsics(), {});
  for (const auto& f : frames) tracker.process(f);
  const TrackingResult& r = tracker.result();
  ASSERT_EQ(r.frames.size(), 4u);
  EXPECT_FALSE(r.frames[1].lost);
  EXPECT_TRUE(r.frames[2].lost);
  EXPECT_FALSE(r.frames[2].error.empty());
  EXPECT_EQ(r.trajectory.entries[2].pose, r.trajectory.entries[1].pose);
}

TEST(SequenceTracker, RejectsNonIncreasingIds) {
  const auto frames =
      renderSequence(buildScene(SceneKind::kCubeGrid, 1), std::vector<Pose>(1, Pose()));
  SequenceTracker tracker(defaultIntrinsics(), {});
  tracker.process(frames[0]);
  EXPECT_THROW(tracker.process(frames[0]), Error);
  EXPECT_THROW((void)trackSequence(frames, defaultIntrinsics(), {}), Error);
}

TEST(RecoverScale, HalvedTrajectoryRestoresLength) {
  const auto gt = generateTrajectory(TrajectoryKind::kArc, 50, {0.3, 1.0});
  std::vector<Pose> halved;
  for (const Pose& p : gt) halved.emplace_back(p.rotation(), 0.5 * p.translation());
  const Trajectory g = Trajectory::fromPoses(gt);
  for (int interval : {1, 7, 200}) {
    const Trajectory s = recoverScale(Trajectory::fromPoses(halved), g, interval);
    EXPECT_NEAR(s.pathLength(), g.pathLength(), 1e-9) << interval;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      EXPECT_LT((s.entries[i].pose.translation() - gt[i].translation()).norm(), 1e-9);
    }
  }
}

TEST(RecoverScale, ZeroLengthWindowWarns) {
  std::vector<Pose> est(5, Pose());
  est[4] = Pose::fromTranslation({1, 0, 0});
  const auto gt = generateTrajectory(TrajectoryKind::kLateral, 5);
  std::vector<std::string> warnings;
  const Trajectory s =
      recoverScale(Trajectory::fromPoses(est), Trajectory::fromPoses(gt), 2, &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(s.entries[1].pose, Pose());
  EXPECT_NEAR(s.entries[4].pose.translation().x(), 0.4, 1e-12);
}

TEST(RecoverScale, MismatchedInputs) {
  const auto a = Trajectory::fromPoses(std::vector<Pose>(3));
  const auto b = Trajectory::fromPoses(std::vector<Pose>(4));
  EXPECT_THROW((void)recoverScale(a, b, 2), Error);
  EXPECT_THROW((void)recoverScale(a, a, 0), Error);
  EXPECT_THROW((void)recoverScale(a, Trajectory::fromPoses(std::vector<Pose>(3), 5), 2), Error);
}
