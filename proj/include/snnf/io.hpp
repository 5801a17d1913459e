#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "snnf/core_geometry.hpp"
#include "snnf/errors.hpp"
#include "snnf/image.hpp"
#include "snnf/semantic_edge_map.hpp"
#include "snnf/trajectory.hpp"

namespace snnf::io {

inline constexpr std::uint16_t kSemanticEdgeVersion = 1;

namespace detail {

inline std::vector<std::uint8_t> readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void writeFile(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

class Writer {
 public:
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    le(v, 4);
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  [[nodiscard]] std::size_t offset() const noexcept { return pos_; }
  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n, const std::string& what) const {
    if (remaining() < n) throw FormatError("truncated payload: " + what + " missing", pos_);
  }
  std::uint16_t u16(const std::string& what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(const std::string& what) { return static_cast<std::uint32_t>(le(4, what)); }
  float f32(const std::string& what) {
    const auto v = static_cast<std::uint32_t>(le(4, what));
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  const std::uint8_t* take(std::size_t n, const std::string& what) {
    need(n, what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::uint64_t le(int n, const std::string& what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

inline void expectMagic(Reader& r, const char* magic) {
  const std::size_t at = r.offset();
  const std::uint8_t* m = r.take(4, "magic");
  if (std::memcmp(m, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + magic, at);
  }
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Semantic edge container
// -----------------------------------------------------------------------------

[[nodiscard]] inline std::uint8_t quantizeProbability(float p) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f));
}

[[nodiscard]] inline std::vector<std::uint8_t> encodeSemanticEdges(const SemanticEdgeMap& map) {
  map.validate();
  detail::Writer w;
  w.raw("SEMG", 4);
  w.u16(kSemanticEdgeVersion);
  w.u32(static_cast<std::uint32_t>(map.width));
  w.u32(static_cast<std::uint32_t>(map.height));
  w.u16(static_cast<std::uint16_t>(map.classCount()));
  for (int c = 0; c < map.classCount(); ++c) {
    const std::string name = map.class_names.empty() ? std::string() : map.class_names[c];
    if (name.size() > 0xffff) throw Error(ErrorKind::kConfig, "class name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name.data(), name.size());
  }
  for (const auto& plane : map.planes) {
    for (float p : plane.pixels()) w.bytes.push_back(quantizeProbability(p));
  }
  return w.bytes;
}

/// Decodes a container. Probabilities come back as byte / 255.
[[nodiscard]] inline SemanticEdgeMap decodeSemanticEdges(const std::vector<std::uint8_t>& bytes) {
  detail::Reader r(bytes);
  detail::expectMagic(r, "SEMG");
  const std::size_t vat = r.offset();
  const std::uint16_t version = r.u16("version");
  if (version != kSemanticEdgeVersion) {
    throw FormatError("unsupported version " + std::to_string(version), vat);
  }
  SemanticEdgeMap map;
  const std::uint32_t w = r.u32("width");
  const std::uint32_t h = r.u32("height");
  const std::size_t cat = r.offset();
  const std::uint16_t c = r.u16("class count");
  if (c < 1 || c > kMaxClasses) throw FormatError("class count out of range", cat);
  if (w > (1u << 16) || h > (1u << 16)) throw FormatError("image size out of range", cat - 8);
  map.width = static_cast<int>(w);
  map.height = static_cast<int>(h);
  bool any_name = false;
  for (int i = 0; i < c; ++i) {
    const std::string label = "class name " + std::to_string(i);
    const std::uint16_t len = r.u16(label);
    const std::uint8_t* s = r.take(len, label);
    map.class_names.emplace_back(reinterpret_cast<const char*>(s), len);
    any_name = any_name || len > 0;
  }
  if (!any_name) map.class_names.clear();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (int i = 0; i < c; ++i) {
    std::string label = "plane " + std::to_string(i);
    if (any_name) label += " (" + map.class_names[static_cast<std::size_t>(i)] + ")";
    const std::uint8_t* p = r.take(n, label);
    GrayImage plane(map.width, map.height);
    for (std::size_t j = 0; j < n; ++j) plane[j] = static_cast<float>(p[j]) / 255.0f;
    map.planes.push_back(std::move(plane));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last plane", r.offset());
  return map;
}

inline void writeSemanticEdges(const SemanticEdgeMap& map, const std::filesystem::path& path) {
  detail::writeFile(path, encodeSemanticEdges(map));
}

[[nodiscard]] inline SemanticEdgeMap readSemanticEdges(const std::filesystem::path& path) {
  return decodeSemanticEdges(detail::readFile(path));
}

// -----------------------------------------------------------------------------
// Inverse-depth plane
// -----------------------------------------------------------------------------

[[nodiscard]] inline std::vector<std::uint8_t> encodeDepthPlane(const InverseDepthImage& img) {
  detail::Writer w;
  w.raw("IDEP", 4);
  w.u32(static_cast<std::uint32_t>(img.width()));
  w.u32(static_cast<std::uint32_t>(img.height()));
  for (float d : img.pixels()) w.f32(d);
  return w.bytes;
}

[[nodiscard]] inline InverseDepthImage decodeDepthPlane(const std::vector<std::uint8_t>& bytes) {
  detail::Reader r(bytes);
  detail::expectMagic(r, "IDEP");
  const std::uint32_t w = r.u32("width");
  const std::uint32_t h = r.u32("height");
  if (w > (1u << 16) || h > (1u << 16)) throw FormatError("image size out of range", 4);
  InverseDepthImage img(static_cast<int>(w), static_cast<int>(h));
  r.need(img.size() * 4, "depth payload");
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = r.f32("depth payload");
  if (r.remaining() != 0) throw FormatError("trailing bytes after depth payload", r.offset());
  return img;
}

inline void writeDepthPlane(const InverseDepthImage& img, const std::filesystem::path& path) {
  detail::writeFile(path, encodeDepthPlane(img));
}

[[nodiscard]] inline InverseDepthImage readDepthPlane(const std::filesystem::path& path) {
  return decodeDepthPlane(detail::readFile(path));
}

// -----------------------------------------------------------------------------
// PGM (P5, 8 bit)
// -----------------------------------------------------------------------------

/// Reads an 8-bit binary PGM into [0, 1] intensities.
[[nodiscard]] inline GrayImage readPgm(const std::filesystem::path& path) {
  const auto bytes = detail::readFile(path);
  std::size_t pos = 0;
  const auto token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw FormatError("truncated PGM header", start);
    return std::string(bytes.begin() + static_cast<long>(start), bytes.begin() + static_cast<long>(pos));
  };
  if (token() != "P5") throw FormatError("not a binary PGM (P5)", 0);
  int w = 0;
  int h = 0;
  int maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::logic_error&) {
    throw FormatError("bad PGM header", pos);
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError("unsupported PGM geometry or depth", pos);
  }
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) throw FormatError("truncated PGM raster", bytes.size());
  GrayImage img(w, h);
  for (std::size_t i = 0; i < n; ++i) img[i] = static_cast<float>(bytes[pos + i]) / maxval;
  return img;
}

inline void writePgm(const GrayImage& img, const std::filesystem::path& path) {
  detail::Writer w;
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  w.raw(header.data(), header.size());
  for (float p : img.pixels()) w.bytes.push_back(quantizeProbability(p));
  detail::writeFile(path, w.bytes);
}

// -----------------------------------------------------------------------------
// Pose files (KITTI: row-major upper 3x4 of [R|t] per line)
// -----------------------------------------------------------------------------

inline constexpr double kPoseReadTolerance = 1e-4;

[[nodiscard]] inline std::string formatPose(const Pose& p) {
  std::string line;
  char buf[32];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double v = c < 3 ? p.rotation()(r, c) : p.translation()(r);
      std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
      if (!line.empty()) line += ' ';
      line += buf;
    }
  }
  return line;
}

[[nodiscard]] inline std::string encodePoses(const Trajectory& t) {
  std::string out;
  for (const auto& e : t.entries) out += formatPose(e.pose) + "\n";
  return out;
}

/// Parses pose lines; frame ids are the 0-based line order among non-empty
/// lines. Rotations off by at most 1e-4 are re-orthonormalized (noted in
/// `warnings` when the deviation exceeds 1e-6); larger deviations fail.
[[nodiscard]] inline Trajectory decodePoses(const std::string& text,
                                            std::vector<std::string>* warnings = nullptr) {
  Trajectory t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::logic_error&) {
        throw ParseError("not a number: '" + tok + "'", lineno);
      }
    }
    if (v.size() != 12) {
      throw ParseError("expected 12 values, found " + std::to_string(v.size()), lineno);
    }
    Eigen::Matrix3d r;
    Eigen::Vector3d tr;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) r(i, j) = v[static_cast<std::size_t>(4 * i + j)];
      tr(i) = v[static_cast<std::size_t>(4 * i + 3)];
    }
    if (!r.allFinite() || !tr.allFinite()) throw ParseError("non-finite pose value", lineno);
    Pose p(r, tr);
    const double dev = p.orthonormalityError();
    if (dev > kPoseReadTolerance || r.determinant() <= 0.0) {
      throw ParseError("rotation is not orthonormal (deviation " + std::to_string(dev) + ")",
                       lineno);
    }
    if (dev > 0.0) {
      if (dev > 1e-6 && warnings) {
        warnings->push_back("line " + std::to_string(lineno) + ": rotation re-orthonormalized");
      }
      p = p.orthonormalized();
    }
    t.push(id++, p);
  }
  return t;
}

inline void writePoses(const Trajectory& t, const std::filesystem::path& path) {
  const std::string s = encodePoses(t);
  detail::writeFile(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

[[nodiscard]] inline Trajectory readPoses(const std::filesystem::path& path,
                                          std::vector<std::string>* warnings = nullptr) {
  const auto bytes = detail::readFile(path);
  return decodePoses(std::string(bytes.begin(), bytes.end()), warnings);
}

// -----------------------------------------------------------------------------
// Calibration and key=value config
// -----------------------------------------------------------------------------

/// "fx fy cx cy" on the first non-empty line.
[[nodiscard]] inline CameraIntrinsics readCalibration(const std::filesystem::path& path) {
  const auto bytes = detail::readFile(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  CameraIntrinsics k;
  if (!(in >> k.fx >> k.fy >> k.cx >> k.cy)) throw ParseError("expected 'fx fy cx cy'", 1);
  if (!k.valid()) throw ParseError("invalid intrinsics", 1);
  return k;
}

inline void writeCalibration(const CameraIntrinsics& k, const std::filesystem::path& path) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", k.fx, k.fy, k.cx, k.cy);
  const std::string s = buf;
  detail::writeFile(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

using ConfigMap = std::map<std::string, std::string>;

/// key = value lines; '#' starts a comment; later keys override earlier ones.
[[nodiscard]] inline ConfigMap parseConfig(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    out[key] = value;
  }
  return out;
}

[[nodiscard]] inline ConfigMap readConfig(const std::filesystem::path& path) {
  const auto bytes = detail::readFile(path);
  return parseConfig(std::string(bytes.begin(), bytes.end()));
}

}  // namespace snnf::io
