// Renders two views of a synthetic cube scene, perturbs the true relative
// pose and registers the second view against the first.
//
//   register_pair [scene_seed] [offset_m]

#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "snnf/snnf.hpp"

int main(int argc, char** argv) {
  using namespace snnf;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 4;
  const double offset = argc > 2 ? std::atof(argv[2]) : 0.5;

  const CameraIntrinsics k{500, 500, 320, 240};
  const SceneModel scene = buildScene(SceneKind::kCubeGrid, seed);
  const Pose cam_ref;
  const Pose cam_cur = Pose::fromTranslation({0.1, 0.02, 0.2});
  const RenderOutput ref_view = renderView(scene, cam_ref, k, 640, 480);
  const RenderOutput cur_view = renderView(scene, cam_cur, k, 640, 480);

  TrackerConfig cfg;
  const FrameInput ref_frame{0, ref_view.gray, ref_view.edges, ref_view.inverse_depth, cam_ref};
  const ReferenceFrame ref = makeKeyframe(ref_frame, ref_view.classes(), cfg);
  std::printf("reference: %zu edge points, %zu support points\n", ref.cloud.edgeCount(),
              ref.cloud.size() - ref.cloud.edgeCount());

  const Pose gt = cam_cur.inverse() * cam_ref;
  const Pose init = gt * Pose::fromTranslation({offset, 0.0, 0.0});
  try {
    const RegistrationResult r =
        registerPyramid(ref, cur_view.classes(), cur_view.gray, init, k, cfg.registration);
    for (const LevelDiagnostics& l : r.levels) {
      std::printf("level %d: %2d iterations, energy %.2f, inliers %.3f\n", l.level, l.iterations,
                  l.final_energy, l.inlier_fraction);
    }
    const double rot =
        rotationAngle((r.pose * gt.inverse()).rotation()) * 180.0 / std::numbers::pi;
    std::printf("start error %.3f m\n", cameraCenterError(init, gt));
    std::printf("final error %.5f m, %.4f deg (converged: %s)\n", cameraCenterError(r.pose, gt),
                rot, r.converged ? "yes" : "no");
  } catch (const Error& e) {
    std::fprintf(stderr, "registration failed: %s\n", e.what());
    return 1;
  }
  return 0;
}
