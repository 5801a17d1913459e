#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "snnf/config.hpp"
#include "snnf/snnf.hpp"

namespace snnf::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumericFailure = 3 };

[[nodiscard]] inline int exitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kUsage;
    case ErrorKind::kNumeric:
    case ErrorKind::kRankDeficient:
    case ErrorKind::kBehindCamera:
      return kNumericFailure;
    default:
      return kData;
  }
}

// -----------------------------------------------------------------------------
// Sequence directories
// -----------------------------------------------------------------------------

inline constexpr const char* kCalibFile = "calib.txt";
inline constexpr const char* kGroundTruthFile = "poses_gt.txt";

[[nodiscard]] inline fs::path framePath(const fs::path& dir, int id, const char* ext) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06d.%s", id, ext);
  return dir / name;
}

[[nodiscard]] inline FrameInput loadFrame(const fs::path& dir, int id) {
  FrameInput f;
  f.id = id;
  f.gray = io::readPgm(framePath(dir, id, "pgm"));
  f.edges = io::readSemanticEdges(framePath(dir, id, "semg"));
  f.inverse_depth = io::readDepthPlane(framePath(dir, id, "idep"));
  return f;
}

/// Frames 0..n-1 present in the directory (stops at the first gap).
[[nodiscard]] inline int countFrames(const fs::path& dir) {
  int n = 0;
  while (fs::exists(framePath(dir, n, "semg"))) ++n;
  return n;
}

[[nodiscard]] inline std::optional<Trajectory> loadGroundTruth(const fs::path& dir) {
  const fs::path p = dir / kGroundTruthFile;
  if (!fs::exists(p)) return std::nullopt;
  std::vector<std::string> warnings;
  Trajectory t = io::readPoses(p, &warnings);
  for (const auto& w : warnings) spdlog::warn("{}: {}", p.string(), w);
  return t;
}

[[nodiscard]] inline const Pose* poseWithId(const Trajectory& t, int id) {
  for (const auto& e : t.entries) {
    if (e.id == id) return &e.pose;
  }
  return nullptr;
}

[[nodiscard]] inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// -----------------------------------------------------------------------------
// Application
// -----------------------------------------------------------------------------

struct GlobalOptions {
  std::string config_path;
  std::string log_level;
};

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Semantic nearest-neighbor-field edge odometry toolkit", "snnf"};
    app.require_subcommand(1);
    app.add_option("--config", global_.config_path, "key = value file overriding defaults");
    app.add_option("--seed", seed_flag_, "random seed");
    app.add_option("--threads", threads_flag_, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--log-level", global_.log_level,
                   "trace|debug|info|warn|error|critical|off (also SNNF_LOG)");

    int code = kOk;
    const auto bind = [&](CLI::App* sub, auto fn) {
      sub->callback([this, &code, fn]() { code = guarded(fn); });
    };
    bind(addSynth(app), [this] { return synth(); });
    bind(addRegister(app), [this] { return registerPair(); });
    bind(addTrack(app), [this] { return track(); });
    bind(addEvalAte(app), [this] { return evalAte(); });
    bind(addEvalRepeat(app), [this] { return evalRepeat(); });
    bind(addBenchBasin(app), [this] { return benchBasin(); });
    bind(addFuse(app), [this] { return fuse(); });
    bind(addNnfDump(app), [this] { return nnfDump(); });

    app.parse_complete_callback([this] { setup(); });
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n" << app.help();
      return kUsage;
    } catch (const SetupFailed& e) {
      return e.code;
    }
    return code;
  }

 private:
  struct SetupFailed {
    int code;
  };

  template <typename F>
  int guarded(F&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return exitCodeFor(e.kind());
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kData;
    }
  }

  // Logging and configuration, run once all arguments are parsed.
  void setup() {
    std::string level = global_.log_level;
    if (level.empty()) {
      if (const char* env = std::getenv("SNNF_LOG")) level = env;
    }
    if (level.empty()) level = "info";
    auto logger = spdlog::get("snnf");
    if (!logger) logger = spdlog::stderr_color_mt("snnf");
    spdlog::set_default_logger(logger);
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && level != "off") {
      err_ << "error: unknown log level '" << level << "'\n";
      throw SetupFailed{kUsage};
    }
    spdlog::set_level(parsed);

    const int code = guarded([this] {
      if (!global_.config_path.empty()) applyConfig(io::readConfig(global_.config_path), cfg_);
      if (seed_flag_) cfg_.seed = *seed_flag_;
      if (threads_flag_) cfg_.registration.threads = *threads_flag_;
      cfg_.validate();
      return kOk;
    });
    if (code != kOk) throw SetupFailed{code};
    std::string resolved;
    for (const auto& [key, value] : resolvedConfig(cfg_)) {
      resolved += (resolved.empty() ? "" : " ") + key + "=" + value;
    }
    spdlog::info("config {}", resolved);
  }

  // --- synth -----------------------------------------------------------------

  struct SynthArgs {
    std::string scene = "cube_grid";
    std::string trajectory = "dolly";
    int frames = 20;
    double step = 0.2;
    double angle = 0.0;
    int classes = 2;
    int width = 640;
    int height = 480;
    std::string out;
  } synth_;

  CLI::App* addSynth(CLI::App& app) {
    auto* s = app.add_subcommand("synth", "render a synthetic sequence into a directory");
    s->add_option("--scene", synth_.scene, "cube_grid|ambiguity_grating|corridor")
        ->check(CLI::IsMember({"cube_grid", "ambiguity_grating", "corridor"}));
    s->add_option("--trajectory", synth_.trajectory, "dolly|arc|lateral")
        ->check(CLI::IsMember({"dolly", "arc", "lateral"}));
    s->add_option("--frames", synth_.frames)->check(CLI::PositiveNumber);
    s->add_option("--step", synth_.step, "meters per frame");
    s->add_option("--angle", synth_.angle, "total arc angle, radians");
    s->add_option("--classes", synth_.classes)->check(CLI::Range(1, 64));
    s->add_option("--width", synth_.width)->check(CLI::Range(16, 8192));
    s->add_option("--height", synth_.height)->check(CLI::Range(16, 8192));
    s->add_option("--out", synth_.out, "output directory")->required();
    return s;
  }

  int synth() {
    const SceneKind kind = synth_.scene == "cube_grid"           ? SceneKind::kCubeGrid
                           : synth_.scene == "ambiguity_grating" ? SceneKind::kAmbiguityGrating
                                                                 : SceneKind::kCorridor;
    const TrajectoryKind tk = synth_.trajectory == "dolly" ? TrajectoryKind::kDolly
                              : synth_.trajectory == "arc" ? TrajectoryKind::kArc
                                                           : TrajectoryKind::kLateral;
    SceneParams sp;
    sp.class_count = synth_.classes;
    const SceneModel scene = buildScene(kind, cfg_.seed, sp);
    const auto poses = generateTrajectory(tk, synth_.frames, {synth_.step, synth_.angle});
    const double f = 500.0 * synth_.width / 640.0;
    const CameraIntrinsics k{f, f, 0.5 * synth_.width, 0.5 * synth_.height};
    const fs::path dir = synth_.out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
    io::writeCalibration(k, dir / kCalibFile);
    io::writePoses(Trajectory::fromPoses(poses), dir / kGroundTruthFile);
    for (int i = 0; i < synth_.frames; ++i) {
      const RenderOutput r = renderView(scene, poses[static_cast<std::size_t>(i)], k,
                                        synth_.width, synth_.height);
      for (const auto& w : r.warnings) spdlog::warn("frame {}: {}", i, w);
      io::writePgm(r.gray, framePath(dir, i, "pgm"));
      io::writeSemanticEdges(r.edges, framePath(dir, i, "semg"));
      io::writeDepthPlane(r.inverse_depth, framePath(dir, i, "idep"));
    }
    spdlog::info("wrote {} frames of {} / {} to {}", synth_.frames, toString(kind), toString(tk),
                 dir.string());
    out_ << "frames " << synth_.frames << "\n";
    return kOk;
  }

  // --- register --------------------------------------------------------------

  struct RegisterArgs {
    std::string dir;
    int ref = 0;
    int cur = 1;
    std::vector<double> offset;
  } reg_;

  CLI::App* addRegister(CLI::App& app) {
    auto* s = app.add_subcommand("register", "register one frame pair of a sequence directory");
    s->add_option("dir", reg_.dir)->required();
    s->add_option("--ref", reg_.ref)->check(CLI::NonNegativeNumber);
    s->add_option("--cur", reg_.cur)->check(CLI::NonNegativeNumber);
    s->add_option("--offset", reg_.offset, "initial translation offset x y z from ground truth")
        ->expected(3);
    return s;
  }

  int registerPair() {
    const fs::path dir = reg_.dir;
    const CameraIntrinsics k = io::readCalibration(dir / kCalibFile);
    const FrameInput ref = loadFrame(dir, reg_.ref);
    const FrameInput cur = loadFrame(dir, reg_.cur);
    const auto gt = loadGroundTruth(dir);
    std::optional<Pose> gt_rel;
    if (gt) {
      const Pose* a = poseWithId(*gt, reg_.ref);
      const Pose* b = poseWithId(*gt, reg_.cur);
      if (a && b) gt_rel = b->inverse() * *a;
    }
    // Identity start, or ground truth shifted by --offset when requested.
    Pose init;
    if (!reg_.offset.empty()) {
      if (!gt_rel) spdlog::warn("no ground truth; offset applied to the identity");
      init = gt_rel.value_or(Pose()) *
             Pose::fromTranslation({reg_.offset[0], reg_.offset[1], reg_.offset[2]});
    }
    const ReferenceFrame keyframe = makeKeyframe(ref, classifyEdges(ref.edges, cfg_.tau), cfg_);
    const RegistrationResult r = registerPyramid(keyframe, classifyEdges(cur.edges, cfg_.tau),
                                                 cur.gray, init, k, cfg_.registration);
    out_ << "pose " << io::formatPose(r.pose) << "\n";
    out_ << "final_energy " << fixed(r.final_energy) << "\n";
    out_ << "iterations " << r.iterations_used << "\n";
    out_ << "inlier_fraction " << fixed(r.inlier_fraction) << "\n";
    out_ << "converged " << (r.converged ? "true" : "false") << "\n";
    out_ << "final_update_norm " << r.final_update_norm << "\n";
    if (gt_rel) {
      out_ << "translation_error_m " << fixed(cameraCenterError(r.pose, *gt_rel), 9) << "\n";
      out_ << "rotation_error_deg "
           << fixed(rotationAngle((r.pose * gt_rel->inverse()).rotation()) * 180.0 /
                        std::numbers::pi,
                    9)
           << "\n";
    }
    return kOk;
  }

  // --- track -----------------------------------------------------------------

  struct TrackArgs {
    std::string dir;
    std::string out;
    int frames = 0;
  } track_;

  CLI::App* addTrack(CLI::App& app) {
    auto* s = app.add_subcommand("track", "track a sequence directory into a pose file");
    s->add_option("dir", track_.dir)->required();
    s->add_option("--out", track_.out, "pose file to write")->required();
    s->add_option("--frames", track_.frames, "limit the number of frames (0 = all)")
        ->check(CLI::NonNegativeNumber);
    return s;
  }

  int track() {
    const fs::path dir = track_.dir;
    const CameraIntrinsics k = io::readCalibration(dir / kCalibFile);
    int n = countFrames(dir);
    if (n == 0) throw Error(ErrorKind::kIo, "no frames in " + dir.string());
    if (track_.frames > 0) n = std::min(n, track_.frames);
    SequenceTracker tracker(k, cfg_);
    int keyframes = 0;
    int lost = 0;
    for (int i = 0; i < n; ++i) {
      const FrameDiagnostics& d = tracker.process(loadFrame(dir, i));
      keyframes += d.keyframe ? 1 : 0;
      lost += d.lost ? 1 : 0;
      if (d.lost) spdlog::warn("frame {} lost: {}", i, d.error);
      spdlog::debug("frame {} kf {} flow {:.2f} inliers {:.3f} iterations {}", i, d.keyframe_id,
                    d.mean_edge_flow, d.inlier_fraction, d.iterations);
    }
    const Trajectory& t = tracker.result().trajectory;
    io::writePoses(t, track_.out);
    out_ << "frames " << t.size() << "\n";
    out_ << "keyframes " << keyframes << "\n";
    out_ << "lost " << lost << "\n";
    if (const auto gt = loadGroundTruth(dir)) {
      double worst = 0.0;
      for (const auto& e : t.entries) {
        if (const Pose* g = poseWithId(*gt, e.id)) {
          worst = std::max(worst, (e.pose.translation() - g->translation()).norm());
        }
      }
      out_ << "max_translation_error_m " << fixed(worst, 9) << "\n";
    }
    return kOk;
  }

  // --- eval-ate --------------------------------------------------------------

  struct AteArgs {
    std::string est;
    std::string gt;
    std::size_t discard = 10;
    bool align = false;
    int scale_interval = 0;
  } ate_;

  CLI::App* addEvalAte(CLI::App& app) {
    auto* s = app.add_subcommand("eval-ate", "absolute trajectory error of a pose file");
    s->add_option("est", ate_.est)->required();
    s->add_option("gt", ate_.gt)->required();
    s->add_option("--discard", ate_.discard, "leading frames to skip");
    s->add_flag("--align", ate_.align, "similarity-align before measuring");
    s->add_option("--scale-interval", ate_.scale_interval,
                  "rescale path length per window of this many frames first (0 = off)")
        ->check(CLI::NonNegativeNumber);
    return s;
  }

  int evalAte() {
    std::vector<std::string> warnings;
    Trajectory est = io::readPoses(ate_.est, &warnings);
    const Trajectory gt = io::readPoses(ate_.gt, &warnings);
    if (ate_.scale_interval > 0) est = recoverScale(est, gt, ate_.scale_interval, &warnings);
    for (const auto& w : warnings) spdlog::warn("{}", w);
    const AteReport r = ate(est, gt, ate_.discard, ate_.align);
    spdlog::info("ATE over {} frames after discarding {}, alignment {}", r.errors.size(),
                 r.discarded, r.aligned ? "sim3" : "none");
    out_ << "ate_rmse_m " << fixed(r.rmse) << "\n";
    out_ << "frames " << r.errors.size() << "\n";
    out_ << "alignment " << (r.aligned ? "sim3" : "none") << "\n";
    return kOk;
  }

  // --- eval-repeat -----------------------------------------------------------

  struct RepeatArgs {
    std::string dir;
    int ref = 0;
    int cur = 1;
    double tol = 2.0;
  } rep_;

  CLI::App* addEvalRepeat(CLI::App& app) {
    auto* s = app.add_subcommand("eval-repeat", "edge repeatability between two frames");
    s->add_option("dir", rep_.dir)->required();
    s->add_option("--ref", rep_.ref)->check(CLI::NonNegativeNumber);
    s->add_option("--cur", rep_.cur)->check(CLI::NonNegativeNumber);
    s->add_option("--tol", rep_.tol, "pixels");
    return s;
  }

  int evalRepeat() {
    const fs::path dir = rep_.dir;
    const CameraIntrinsics k = io::readCalibration(dir / kCalibFile);
    const auto gt = loadGroundTruth(dir);
    if (!gt) throw Error(ErrorKind::kIo, "missing " + (dir / kGroundTruthFile).string());
    const Pose* a = poseWithId(*gt, rep_.ref);
    const Pose* b = poseWithId(*gt, rep_.cur);
    if (!a || !b) throw Error(ErrorKind::kIo, "ground truth lacks one of the frames");
    const FrameInput ref = loadFrame(dir, rep_.ref);
    const FrameInput cur = loadFrame(dir, rep_.cur);
    const EdgeCloud cloud = allEdgePoints(classifyEdges(ref.edges, cfg_.tau), ref.inverse_depth);
    const ClassifiedEdges cur_classes = classifyEdges(cur.edges, cfg_.tau);
    BinaryImage cur_edges(cur_classes.width(), cur_classes.height());
    for (std::size_t i = 0; i < cur_edges.size(); ++i) cur_edges[i] = cur_classes.masks[i] ? 1 : 0;
    const RepeatabilityReport r = repeatability(cloud, cur_edges, b->inverse() * *a, k, rep_.tol);
    out_ << "repeatability " << fixed(r.ratio) << "\n";
    out_ << "expected " << r.expected << "\n";
    out_ << "redetected " << r.redetected << "\n";
    return kOk;
  }

  // --- bench-basin -----------------------------------------------------------

  struct BasinArgs {
    int classes = 2;
    double max = 5.0;
    double step = 0.05;
    int directions = 8;
    double threshold = 0.05;
    std::string out;
  } basin_;

  CLI::App* addBenchBasin(CLI::App& app) {
    auto* s = app.add_subcommand("bench-basin",
                                 "convergence basin of semantic vs class-blind association (CSV)");
    s->add_option("--classes", basin_.classes, "grating classes (1 = control)")
        ->check(CLI::Range(1, 64));
    s->add_option("--max", basin_.max, "largest displacement, meters");
    s->add_option("--step", basin_.step, "displacement step, meters");
    s->add_option("--directions", basin_.directions)->check(CLI::PositiveNumber);
    s->add_option("--threshold", basin_.threshold, "camera-center error counted as converged");
    s->add_option("--out", basin_.out, "CSV file (default: stdout)");
    return s;
  }

  int benchBasin() {
    SceneParams sp;
    sp.class_count = basin_.classes;
    const SceneModel scene = buildScene(SceneKind::kAmbiguityGrating, cfg_.seed, sp);
    const CameraIntrinsics k{500, 500, 320, 240};
    const Pose cam_ref;
    const Pose cam_cur = Pose::fromTranslation({0.05, 0.0, 0.2});
    const RenderOutput r0 = renderView(scene, cam_ref, k, 640, 480);
    const RenderOutput r1 = renderView(scene, cam_cur, k, 640, 480);
    const FrameInput f0{0, r0.gray, r0.edges, r0.inverse_depth, cam_ref};
    const ReferenceFrame ref = makeKeyframe(f0, r0.classes(), cfg_);
    BasinOptions opt;
    opt.registration = cfg_.registration;
    opt.directions = basin_.directions;
    opt.threshold = basin_.threshold;
    const auto curves =
        convergenceBasin(ref, r1.classes(), r1.gray, cam_cur.inverse() * cam_ref, k,
                         {Association::kSemantic, Association::kGlobal},
                         displacementGrid(0.0, basin_.max, basin_.step), opt);
    std::ostringstream csv;
    csv << "displacement_m";
    for (const auto& c : curves) {
      csv << "," << toString(c.variant) << "_converged_fraction," << toString(c.variant)
          << "_mean_error_m";
    }
    csv << "\n";
    for (std::size_t i = 0; i < curves.front().points.size(); ++i) {
      csv << fixed(curves.front().points[i].displacement, 4);
      for (const auto& c : curves) {
        csv << "," << fixed(c.points[i].converged_fraction, 4) << ","
            << fixed(c.points[i].mean_error, 6);
      }
      csv << "\n";
    }
    for (const auto& c : curves) {
      spdlog::info("{} basin width {} m", toString(c.variant), fixed(c.width(), 3));
    }
    if (basin_.out.empty()) {
      out_ << csv.str();
    } else {
      const std::string s = csv.str();
      io::detail::writeFile(basin_.out, std::vector<std::uint8_t>(s.begin(), s.end()));
    }
    for (const auto& c : curves) {
      out_ << "# width_" << toString(c.variant) << " " << fixed(c.width(), 3) << "\n";
    }
    return kOk;
  }

  // --- fuse ------------------------------------------------------------------

  struct FuseArgs {
    std::string edge;
    std::vector<std::string> segs;
    std::vector<std::string> names;
    std::string out;
  } fuse_;

  CLI::App* addFuse(CLI::App& app) {
    auto* s = app.add_subcommand("fuse", "edge x segmentation probabilities -> semantic edges");
    s->add_option("--edge", fuse_.edge, "edge probability PGM")->required();
    s->add_option("--seg", fuse_.segs, "segmentation probability PGM, one per class")->required();
    s->add_option("--names", fuse_.names, "class names")->delimiter(',');
    s->add_option("--out", fuse_.out, "container to write")->required();
    return s;
  }

  int fuse() {
    const GrayImage edge = io::readPgm(fuse_.edge);
    std::vector<GrayImage> segs;
    for (const auto& p : fuse_.segs) segs.push_back(io::readPgm(p));
    const SemanticEdgeMap map = fuseEdgeSemantics(edge, segs, fuse_.names);
    io::writeSemanticEdges(map, fuse_.out);
    out_ << "classes " << map.classCount() << "\n";
    return kOk;
  }

  // --- nnf-dump --------------------------------------------------------------

  struct DumpArgs {
    std::string input;
    std::string prefix;
    double max_dist = 64.0;
  } dump_;

  CLI::App* addNnfDump(CLI::App& app) {
    auto* s = app.add_subcommand("nnf-dump", "write per-class distance planes as PGM");
    s->add_option("input", dump_.input, "semantic edge container")->required();
    s->add_option("--out-prefix", dump_.prefix, "output path prefix")->required();
    s->add_option("--max-dist", dump_.max_dist, "distance mapped to white, pixels")
        ->check(CLI::PositiveNumber);
    return s;
  }

  int nnfDump() {
    const SemanticEdgeMap map = io::readSemanticEdges(dump_.input);
    const ClassifiedEdges classes = classifyEdges(map, cfg_.tau);
    const auto plane = [&](const NearestNeighborField& f, const std::string& tag) {
      GrayImage img(f.width(), f.height(), 1.0f);
      double worst = 0.0;
      if (!f.empty()) {
        for (int v = 0; v < f.height(); ++v) {
          for (int u = 0; u < f.width(); ++u) {
            const double d = f.distanceAt(u, v);
            worst = std::max(worst, d);
            img(u, v) = static_cast<float>(std::min(d, dump_.max_dist) / dump_.max_dist);
          }
        }
      }
      io::writePgm(img, dump_.prefix + "_" + tag + ".pgm");
      out_ << tag << " seeds " << f.seedCount() << " max_distance " << fixed(worst, 3) << "\n";
    };
    const SemanticFieldSet set = buildSnnf(classes, cfg_.registration.threads);
    for (int c = 0; c < set.classCount(); ++c) plane(set.field(c), "class" + std::to_string(c));
    plane(buildAnnf(classes), "annf");
    return kOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  GlobalOptions global_;
  std::optional<std::uint64_t> seed_flag_;
  std::optional<int> threads_flag_;
  TrackerConfig cfg_;
};

/// Entry point shared by the executable and the tests.
inline int runCli(int argc, const char* const* argv, std::ostream& out = std::cout,
                  std::ostream& err = std::cerr) {
  App app(out, err);
  return app.run(argc, argv);
}

inline int runCli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                  std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"snnf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return runCli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace snnf::cli
