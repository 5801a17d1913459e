// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "support/oracles.hpp"

using namespace snnf;
using snnf::oracle::defaultIntrinsics;
using snnf::oracle::kHeight;
using snnf::oracle::kWidth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every registration run by this binary, for the monotonicity criterion.
struct MonotonicityLog {
  std::size_t registrations = 0;
  std::size_t accepted_steps = 0;
  std::size_t violations = 0;

  void add(const RegistrationResult& r) {
    ++registrations;
    for (const auto& l : r.levels) {
      for (const auto& s : l.steps) {
        if (!s.accepted) continue;
        ++accepted_steps;
        if (!(s.energy_after <= s.energy_before)) ++violations;
      }
    }
  }

  void add(const TrackingResult& t) {
    // The first frame and lost frames have no completed registration.
    for (std::size_t i = 1; i < t.frames.size(); ++i) {
      if (t.frames[i].lost) continue;
      ++registrations;
      if (!t.frames[i].monotone) ++violations;
    }
  }
} g_monotone;

using Vec2L = Eigen::Matrix<long double, 2, 1>;

double rotationErrorDeg(const Pose& est, const Pose& gt) {
  return rotationAngle((est * gt.inverse()).rotation()) * 180.0 / std::numbers::pi;
}

// -----------------------------------------------------------------------------

Outcome nnfOracle() {
  Rng rng(2024);
  double build_seconds = 0.0;
  std::size_t fields = 0;
  std::size_t mismatches = 0;
  for (int map = 0; map < 100; ++map) {
    const int classes = 1 + static_cast<int>(rng.below(4));
    const double density = rng.uniform(0.01, 0.20);
    ClassifiedEdges c{Image<ClassMask>(64, 64), classes};
    for (auto& m : c.masks.pixels()) {
      if (rng.uniform() < density) m = 1 + rng.below((ClassMask{1} << classes) - 1);
    }
    c.masks(static_cast<int>(rng.below(64)), static_cast<int>(rng.below(64))) = 1;
    const Stopwatch sw;
    const SemanticFieldSet set = buildSnnf(c);
    build_seconds += sw.seconds();
    for (int k = 0; k < classes; ++k) {
      const ClassMask bit = ClassMask{1} << k;
      const auto brute = oracle::bruteForceField(
          64, 64, [&](int u, int v) { return (c.masks(u, v) & bit) != 0; });
      const NearestNeighborField& f = set.field(k);
      ++fields;
      if (brute.seed.empty()) {
        mismatches += f.empty() ? 0 : 1;
        continue;
      }
      for (int v = 0; v < 64; ++v) {
        for (int u = 0; u < 64; ++u) {
          const std::size_t i = static_cast<std::size_t>(v) * 64 + u;
          if (f.seedIndexAt(u, v) != brute.seed[i] || f.distanceAt(u, v) != brute.distance[i]) {
            ++mismatches;
          }
        }
      }
    }
  }
  return {mismatches == 0 && build_seconds < 10.0,
          fmt("%zu fields, %zu mismatching cells, build time %.3f s", fields, mismatches,
              build_seconds)};
}

Outcome geometryRoundTrips() {
  Rng rng(7);
  const CameraIntrinsics k{520.0, 510.0, 330.0, 235.0};
  double worst_px = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Pixel p(rng.uniform(-100, 740), rng.uniform(-100, 580));
    const InverseDepth d(rng.uniform(0.01, 10.0));
    worst_px = std::max(worst_px, (project(backProject(p, d, k), k) - p).norm());
  }
  double worst_se3 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Se3Tangent xi;
    for (int j = 0; j < 3; ++j) xi(j) = rng.uniform(-10, 10);
    Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    xi.tail<3>() = axis.normalized() * rng.uniform(0.0, 3.1);
    const Pose pose = se3Exp(xi);
    worst_se3 = std::max(worst_se3, (se3Log(pose) - xi).cwiseAbs().maxCoeff());
    const Pose again = se3Exp(se3Log(pose));
    worst_se3 = std::max(worst_se3, (again.rotation() - pose.rotation()).cwiseAbs().maxCoeff());
    worst_se3 =
        std::max(worst_se3, (again.translation() - pose.translation()).cwiseAbs().maxCoeff());
  }
  return {worst_px < 1e-9 && worst_se3 < 1e-9,
          fmt("project/back-project max error %.2e px over 1e5, exp/log max error %.2e over 1e3",
              worst_px, worst_se3)};
}

Outcome jacobianChecks() {
  Rng rng(99);
  const CameraIntrinsics k = defaultIntrinsics();
  double warp_worst = 0.0;
  double edge_worst = 0.0;
  double photo_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Pixel p(rng.uniform(0, 640), rng.uniform(0, 480));
    const InverseDepth d(rng.uniform(0.05, 1.0));
    const Pose pose = oracle::randomPose(rng, 0.3, 0.5);
    const auto numeric = oracle::warpFiniteDifference<2>([](const Vec2L& q) { return q; }, p,
                                                          d.value(), pose, k);
    warp_worst = std::max(warp_worst, oracle::maxRelativeError(warpJacobian(p, d, pose, k), numeric));
  }

  ClassifiedEdges classes{Image<ClassMask>(640, 480), 3};
  for (auto& m : classes.masks.pixels()) {
    if (rng.uniform() < 0.01) m = ClassMask{1} << rng.below(3);
  }
  const TargetFrame target =
      buildTarget(classes, oracle::smoothImage(640, 480, 0.2), Association::kSemantic);
  int edge_checked = 0;
  while (edge_checked < 1000) {
    const EdgePoint p{Pixel(rng.uniform(40, 600), rng.uniform(40, 440)),
                      InverseDepth(rng.uniform(0.05, 0.5)), ClassMask{1} << rng.below(3), 1.0,
                      std::nullopt};
    const Pose pose = oracle::randomPose(rng, 0.05, 0.1);
    RegistrationConfig cfg;
    cfg.max_correspondence_dist = 1e9;
    cfg.point_to_tangent = edge_checked % 2 == 0;
    const EdgeResidual e = edgeResiduals(p, pose, k, target, cfg).front();
    if (e.dropped != DropReason::kNone) continue;
    const Eigen::Matrix<long double, 2, 1> m = e.match.cast<long double>();
    const Eigen::Matrix<long double, 2, 1> n = e.normal.cast<long double>();
    double err;
    if (cfg.point_to_tangent) {
      const auto numeric = oracle::warpFiniteDifference<1>(
          [&](const Vec2L& q) { return Eigen::Matrix<long double, 1, 1>(n.dot(q - m)); }, p.pixel,
          p.inverse_depth.value(), pose, k);
      err = oracle::maxRelativeError(e.jacobian.topRows<1>(), numeric);
    } else {
      const auto numeric = oracle::warpFiniteDifference<2>(
          [&](const Vec2L& q) { return Vec2L(q - m); }, p.pixel, p.inverse_depth.value(), pose, k);
      err = oracle::maxRelativeError(e.jacobian, numeric);
    }
    edge_worst = std::max(edge_worst, err);
    ++edge_checked;
  }

  const GrayImage ref = oracle::smoothImage(640, 480, 0.0);
  const GrayImage cur = oracle::smoothImage(640, 480, 0.7);
  int photo_checked = 0;
  int skipped = 0;
  while (photo_checked < 1000) {
    const EdgePoint p{Pixel(rng.uniform(40, 600), rng.uniform(40, 440)),
                      InverseDepth(rng.uniform(0.05, 0.5)), 0, 1.0, std::nullopt};
    const Pose pose = oracle::randomPose(rng, 0.05, 0.1);
    const auto r = photoResidual(ref, cur, p, pose, k);
    if (!r) continue;
    // Bilinear interpolation is not differentiable on grid lines.
    const Pixel w = warp(p.pixel, p.inverse_depth, pose, k);
    const auto grid = [](double x) { return std::min(x - std::floor(x), std::ceil(x) - x); };
    if (grid(w.x()) < 1e-3 || grid(w.y()) < 1e-3) {
      ++skipped;
      continue;
    }
    const auto numeric = oracle::warpFiniteDifference<1>(
        [&](const Vec2L& q) {
          return Eigen::Matrix<long double, 1, 1>(oracle::bilinearLong(cur, q.x(), q.y()));
        },
        p.pixel, p.inverse_depth.value(), pose, k);
    photo_worst = std::max(photo_worst, oracle::maxRelativeError(r->jacobian, numeric));
    ++photo_checked;
  }
  return {warp_worst < 1e-5 && edge_worst < 1e-4 && photo_worst < 1e-4,
          fmt("max relative error: warp %.2e, edge %.2e, photometric %.2e (1000 each, %d "
              "grid-line samples redrawn)",
              warp_worst, edge_worst, photo_worst, skipped)};
}

Outcome poseRecovery() {
  const SceneModel scene = buildScene(SceneKind::kCubeGrid, 4);
  const auto pair = oracle::renderPair(scene, Pose(), Pose::fromTranslation({0.1, 0.02, 0.2}));
  const ReferenceFrame ref = oracle::referenceFrom(pair.ref);
  const ClassifiedEdges cur = pair.cur.classes();
  double worst_t = 0.0;
  double worst_r = 0.0;
  double worst_s = 0.0;
  for (int d = 0; d < 6; ++d) {
    Eigen::Vector3d off = Eigen::Vector3d::Zero();
    off(d % 3) = d < 3 ? 0.5 : -0.5;
    const Stopwatch sw;
    const RegistrationResult r = registerPyramid(ref, cur, pair.cur.gray,
                                                 pair.gt_relative * Pose::fromTranslation(off),
                                                 defaultIntrinsics(), {});
    worst_s = std::max(worst_s, sw.seconds());
    g_monotone.add(r);
    worst_t = std::max(worst_t, cameraCenterError(r.pose, pair.gt_relative));
    worst_r = std::max(worst_r, rotationErrorDeg(r.pose, pair.gt_relative));
  }
  return {worst_t < 0.01 && worst_r < 0.05 && worst_s < 1.0,
          fmt("6 offsets of 0.5 m: worst translation %.4f m, rotation %.4f deg, time %.3f s",
              worst_t, worst_r, worst_s)};
}

Outcome basinReproduction() {
  const Stopwatch sw;
  const auto widths = [](int class_count) {
    SceneParams sp;
    sp.class_count = class_count;
    const SceneModel scene = buildScene(SceneKind::kAmbiguityGrating, 0, sp);
    const auto pair =
        oracle::renderPair(scene, Pose(), Pose::fromTranslation({0.05, 0.0, 0.2}));
    const ReferenceFrame ref = oracle::referenceFrom(pair.ref);
    const auto curves = convergenceBasin(
        ref, pair.cur.classes(), pair.cur.gray, pair.gt_relative, defaultIntrinsics(),
        {Association::kSemantic, Association::kGlobal}, displacementGrid(0.0, 5.0, 0.05), {});
    return std::pair{curves[0].width(), curves[1].width()};
  };
  const auto [snnf2, annf2] = widths(2);
  const auto [snnf1, annf1] = widths(1);
  const double secs = sw.seconds();
  const bool ratio_ok = annf2 > 0.0 ? snnf2 >= 1.5 * annf2 : snnf2 > 0.0;
  return {ratio_ok && snnf1 == annf1 && secs < 300.0,
          fmt("two-class widths snnf %.2f m, annf %.2f m (ratio %.2f); single-class widths %.2f "
              "/ %.2f m; %.0f s",
              snnf2, annf2, annf2 > 0.0 ? snnf2 / annf2 : 0.0, snnf1, annf1, secs)};
}

Outcome restriction() {
  Rng rng(5150);
  std::size_t compared = 0;
  std::size_t violations = 0;
  while (compared < 10000) {
    const int classes = 2 + static_cast<int>(rng.below(4));
    ClassifiedEdges c{Image<ClassMask>(128, 96), classes};
    const double density = rng.uniform(0.005, 0.1);
    for (auto& m : c.masks.pixels()) {
      if (rng.uniform() < density) m = ClassMask{1} << rng.below(static_cast<std::uint64_t>(classes));
    }
    c.masks(0, 0) = 1;
    const SemanticFieldSet snnf = buildSnnf(c);
    const NearestNeighborField annf = buildAnnf(c);
    for (int i = 0; i < 1000 && compared < 10000; ++i) {
      const Pixel q(static_cast<double>(rng.below(128)), static_cast<double>(rng.below(96)));
      const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
      const auto s = snnf.field(cls).tryLookup(q);
      if (!s) continue;
      if (s->distance < annf.lookup(q).distance) ++violations;
      ++compared;
    }
  }
  return {violations == 0, fmt("%zu single-label queries, %zu closer than the global match",
                               compared, violations)};
}

std::vector<FrameInput> renderSequence(const SceneModel& scene, const std::vector<Pose>& poses) {
  std::vector<FrameInput> frames;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const RenderOutput r = renderView(scene, poses[i], defaultIntrinsics(), kWidth, kHeight);
    frames.push_back({static_cast<int>(i), r.gray, r.edges, r.inverse_depth, poses[i]});
  }
  return frames;
}

TrackingResult trackLogged(const std::vector<FrameInput>& frames) {
  TrackingResult r = trackSequence(frames, defaultIntrinsics(), {});
  g_monotone.add(r);
  return r;
}

Outcome tracker() {
  const SceneModel scene = buildScene(SceneKind::kCubeGrid, 4);
  const auto gt = generateTrajectory(TrajectoryKind::kDolly, 20);
  const auto frames = renderSequence(scene, gt);
  const TrackingResult a = trackLogged(frames);
  const TrackingResult b = trackLogged(frames);
  double worst = 0.0;
  int lost = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    worst = std::max(worst, (a.trajectory.entries[i].pose.translation() - gt[i].translation()).norm());
    lost += a.frames[i].lost ? 1 : 0;
  }
  const bool identical = a.trajectory == b.trajectory;

  const auto still = renderSequence(scene, std::vector<Pose>(10, Pose()));
  const TrackingResult s = trackLogged(still);
  double static_worst = 0.0;
  for (const auto& e : s.trajectory.entries) {
    static_worst = std::max(static_worst, e.pose.translation().norm());
    static_worst = std::max(static_worst, rotationAngle(e.pose.rotation()));
  }
  return {worst < 0.01 && lost == 0 && identical && static_worst < 1e-6,
          fmt("dolly worst error %.4f m, lost %d, repeat bit-identical %s; static max deviation "
              "%.2e",
              worst, lost, identical ? "yes" : "no", static_worst)};
}

Outcome monotonicity() {
  // Extra pair registrations on every scene kind, both associations, on top
  // of everything the other criteria already ran.
  for (SceneKind kind : {SceneKind::kCubeGrid, SceneKind::kAmbiguityGrating, SceneKind::kCorridor}) {
    const SceneModel scene = buildScene(kind, 1);
    const auto pair = oracle::renderPair(scene, Pose(), Pose::fromTranslation({0.05, 0.0, 0.3}));
    const ReferenceFrame ref = oracle::referenceFrom(pair.ref);
    for (Association a : {Association::kSemantic, Association::kGlobal}) {
      RegistrationConfig cfg;
      cfg.association = a;
      for (double off : {0.0, 0.3, 1.0}) {
        try {
          g_monotone.add(registerPyramid(ref, pair.cur.classes(), pair.cur.gray,
                                         pair.gt_relative * Pose::fromTranslation({off, 0, off}),
                                         defaultIntrinsics(), cfg));
        } catch (const Error&) {
          // A failed registration has no steps to check.
        }
      }
    }
  }
  return {g_monotone.violations == 0 && g_monotone.accepted_steps > 0,
          fmt("%zu registrations, %zu accepted steps, %zu energy increases", g_monotone.registrations,
              g_monotone.accepted_steps, g_monotone.violations)};
}

Outcome metricSanity() {
  Trajectory t;
  for (int i = 0; i < 30; ++i) {
    t.push(i, Pose::fromTranslation({0.25 * i, -0.5 * (i % 3), 0.125 * i}));
  }
  Trajectory shifted = t;
  for (auto& e : shifted.entries) {
    e.pose = Pose(e.pose.rotation(), e.pose.translation() + Eigen::Vector3d(1, 0, 0));
  }
  const double zero = ate(t, t).rmse;
  const double one = ate(shifted, t).rmse;

  const SceneModel scene = buildScene(SceneKind::kCubeGrid, 3);
  const auto pair = oracle::renderPair(scene, Pose(), Pose::fromTranslation({0.2, -0.05, 0.3}));
  const ClassifiedEdges cur = pair.cur.classes();
  BinaryImage cur_edges(cur.width(), cur.height());
  for (std::size_t i = 0; i < cur.masks.size(); ++i) cur_edges[i] = cur.masks[i] ? 1 : 0;
  const double rep = repeatability(allEdgePoints(pair.ref.classes(), pair.ref.inverse_depth),
                                   cur_edges, pair.gt_relative, defaultIntrinsics())
                         .ratio;

  const auto gt = generateTrajectory(TrajectoryKind::kArc, 60, {0.3, 1.2});
  std::vector<Pose> halved;
  for (const Pose& p : gt) halved.emplace_back(p.rotation(), 0.5 * p.translation());
  const Trajectory g = Trajectory::fromPoses(gt);
  const double restored =
      std::abs(recoverScale(Trajectory::fromPoses(halved), g, 20).pathLength() - g.pathLength());

  return {zero == 0.0 && one == 1.0 && rep == 1.0 && restored < 1e-9,
          fmt("ATE identical %.17g, unit offset %.17g, repeatability %.17g, path length error "
              "after scale recovery %.2e",
              zero, one, rep, restored)};
}

int cliCode(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out;
  std::ostringstream e;
  std::vector<std::string> full{"--log-level", "off"};
  full.insert(full.end(), args.begin(), args.end());
  const int code = cli::runCli(full, out, e);
  if (err) *err = e.str();
  return code;
}

Outcome formats() {
  Rng rng(10);
  std::vector<std::string> failures;
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // Semantic edge container: byte-identical and value-exact round trips.
  for (int trial = 0; trial < 20; ++trial) {
    SemanticEdgeMap m{1 + static_cast<int>(rng.below(50)), 1 + static_cast<int>(rng.below(50)),
                      {}, {}};
    const int classes = 1 + static_cast<int>(rng.below(6));
    for (int c = 0; c < classes; ++c) {
      GrayImage p(m.width, m.height);
      for (auto& x : p.pixels()) x = static_cast<float>(rng.below(256)) / 255.0f;
      m.planes.push_back(p);
      if (trial % 2) m.class_names.push_back("c" + std::to_string(c));
    }
    const auto bytes = io::encodeSemanticEdges(m);
    const SemanticEdgeMap back = io::decodeSemanticEdges(bytes);
    check(io::encodeSemanticEdges(back) == bytes, "container bytes");
    for (std::size_t c = 0; c < m.planes.size(); ++c) {
      check(back.planes[c] == m.planes[c], "container values");
    }
  }

  // Depth plane: bit-exact.
  InverseDepthImage depth(33, 21);
  for (auto& d : depth.pixels()) d = static_cast<float>(rng.uniform(-1, 3));
  check(io::decodeDepthPlane(io::encodeDepthPlane(depth)) == depth, "depth plane");

  // Pose file: < 1e-8 per element.
  std::vector<Pose> poses;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d t(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
    poses.emplace_back(oracle::randomPose(rng, 3.0, 0.0).rotation(), t);
  }
  const Trajectory back = io::decodePoses(io::encodePoses(Trajectory::fromPoses(poses)));
  double worst = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    worst = std::max(worst, (back.entries[i].pose.rotation() - poses[i].rotation()).cwiseAbs().maxCoeff());
    worst = std::max(worst,
                     (back.entries[i].pose.translation() - poses[i].translation()).cwiseAbs().maxCoeff());
  }
  check(worst < 1e-8, fmt("pose round trip %.2e", worst));

  // Corruptions map to their error classes.
  SemanticEdgeMap small{4, 4, {GrayImage(4, 4), GrayImage(4, 4)}, {}};
  auto bytes = io::encodeSemanticEdges(small);
  const auto kindOf = [](auto&& f) -> std::string {
    try {
      f();
    } catch (const ParseError& e) {
      return std::string("parse:") + e.what();
    } catch (const FormatError& e) {
      return std::string("format:") + e.what();
    } catch (const Error& e) {
      return std::string(toString(e.kind())) + ":" + e.what();
    }
    return "none";
  };
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  const std::string t = kindOf([&] { (void)io::decodeSemanticEdges(truncated); });
  check(t.rfind("format:", 0) == 0 && t.find("plane 1") != std::string::npos, "truncated " + t);
  auto magic = bytes;
  magic[1] = 'X';
  check(kindOf([&] { (void)io::decodeSemanticEdges(magic); }).rfind("format:", 0) == 0, "magic");
  auto version = bytes;
  version[4] = 9;
  check(kindOf([&] { (void)io::decodeSemanticEdges(version); }).find("version") != std::string::npos,
        "version");
  const std::string eleven =
      kindOf([] { (void)io::decodePoses("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1\n"); });
  check(eleven.rfind("parse:", 0) == 0 && eleven.find("line 2") != std::string::npos, "11 fields");
  auto short_depth = io::encodeDepthPlane(depth);
  short_depth.pop_back();
  check(kindOf([&] { (void)io::decodeDepthPlane(short_depth); }).rfind("format:", 0) == 0,
        "depth truncation");

  // Exit codes through the command line.
  const fs::path dir = fs::temp_directory_path() / "snnf_acceptance_cli";
  fs::remove_all(dir);
  check(cliCode({"synth", "--frames", "2", "--width", "160", "--height", "120", "--out",
                 (dir / "seq").string()}) == 0,
        "synth exit");
  const std::string gt = (dir / "seq" / "poses_gt.txt").string();
  check(cliCode({"eval-ate", gt, gt, "--discard", "0"}) == 0, "eval-ate exit");
  std::string err;
  const std::string missing = (dir / "missing.txt").string();
  check(cliCode({"eval-ate", missing, gt}, &err) == 2 && err.find(missing) != std::string::npos,
        "missing file exit");
  const fs::path semg = cli::framePath(dir / "seq", 1, "semg");
  fs::resize_file(semg, fs::file_size(semg) - 10);
  check(cliCode({"register", (dir / "seq").string()}) == 2, "corrupt container exit");
  std::ofstream(dir / "bad.txt") << "1 2 3\n";
  check(cliCode({"eval-ate", (dir / "bad.txt").string(), gt}) == 2, "bad pose file exit");
  check(cliCode({"no-such-command"}) == 1, "unknown subcommand exit");
  fs::remove_all(dir);

  std::string list;
  for (const auto& f : failures) list += (list.empty() ? "" : "; ") + f;
  return {failures.empty(), failures.empty()
                                ? fmt("container, depth and pose round trips exact (pose %.2e); "
                                      "corruptions and exit codes as specified",
                                      worst)
                                : "failed: " + list};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"nnf oracle equality", nnfOracle},
      {"geometry round trips", geometryRoundTrips},
      {"jacobian checks", jacobianChecks},
      {"synthetic pose recovery", poseRecovery},
      {"convergence basin", basinReproduction},
      {"restriction monotonicity", restriction},
      {"irls monotonicity", [] { return Outcome{}; }},  // evaluated last
      {"tracker end-to-end", tracker},
      {"metric sanity", metricSanity},
      {"format round trips", formats},
  };
  std::vector<Outcome> results(criteria.size());
  const auto evaluate = [&](std::size_t i) {
    try {
      results[i] = criteria[i].second();
    } catch (const std::exception& e) {
      results[i] = {false, std::string("exception: ") + e.what()};
    }
  };
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (i != 6) evaluate(i);
  }
  results[6] = [&] {
    try {
      return monotonicity();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  }();

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::printf("criterion %2zu %s  %s: %s\n", i + 1, results[i].pass ? "PASS" : "FAIL",
                criteria[i].first, results[i].detail.c_str());
    all = all && results[i].pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
