#pragma once

#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "snnf/errors.hpp"
#include "snnf/io.hpp"
#include "snnf/sequence_tracker.hpp"

namespace snnf {

namespace detail {

template <typename T>
T parseValue(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw Error(ErrorKind::kConfig, "bad boolean for " + key + ": '" + text + "'");
  } else {
    in >> v;
    if (!in || !in.eof()) {
      throw Error(ErrorKind::kConfig, "bad value for " + key + ": '" + text + "'");
    }
  }
  return v;
}

template <typename T>
std::string formatValue(const T& v) {
  std::ostringstream out;
  out.precision(17);
  if constexpr (std::is_same_v<T, bool>) {
    out << (v ? "true" : "false");
  } else {
    out << v;
  }
  return out.str();
}

struct ConfigField {
  std::function<void(TrackerConfig&, const std::string&)> set;
  std::function<std::string(const TrackerConfig&)> get;
};

#define SNNF_FIELD(name, member)                                                          \
  {                                                                                      \
    name, ConfigField {                                                                  \
      [](TrackerConfig& c, const std::string& s) {                                       \
        c.member = parseValue<std::decay_t<decltype(c.member)>>(name, s);                \
      },                                                                                 \
          [](const TrackerConfig& c) { return formatValue(c.member); }                   \
    }                                                                                    \
  }

inline const std::map<std::string, ConfigField>& configFields() {
  static const std::map<std::string, ConfigField> fields = {
      SNNF_FIELD("huber_gamma", registration.huber_gamma),
      SNNF_FIELD("max_iterations", registration.max_iterations),
      SNNF_FIELD("update_tolerance", registration.update_tolerance),
      SNNF_FIELD("pyramid_levels", registration.pyramid_levels),
      SNNF_FIELD("lambda_edge", registration.lambda_edge),
      SNNF_FIELD("lambda_photo", registration.lambda_photo),
      SNNF_FIELD("point_to_tangent", registration.point_to_tangent),
      SNNF_FIELD("damping_init", registration.damping_init),
      SNNF_FIELD("max_correspondence_dist", registration.max_correspondence_dist),
      SNNF_FIELD("photo_huber_gamma", registration.photo_huber_gamma),
      SNNF_FIELD("z_min", registration.z_min),
      SNNF_FIELD("threads", registration.threads),
      SNNF_FIELD("keyframe_flow_px", keyframe_flow_px),
      SNNF_FIELD("keyframe_inlier", keyframe_inlier),
      SNNF_FIELD("edge_budget", edge_budget),
      SNNF_FIELD("use_support", use_support),
      SNNF_FIELD("support_target", support.target_total),
      SNNF_FIELD("support_min", support.min_support),
      SNNF_FIELD("support_margin", support.margin),
      SNNF_FIELD("tau", tau),
      SNNF_FIELD("scale_interval", scale_interval),
      SNNF_FIELD("seed", seed),
  };
  return fields;
}

#undef SNNF_FIELD

}  // namespace detail

/// Applies key = value overrides; unknown keys are config errors.
inline void applyConfig(const io::ConfigMap& values, TrackerConfig& cfg) {
  const auto& fields = detail::configFields();
  for (const auto& [key, value] : values) {
    if (key == "association") {
      if (value == "snnf") {
        cfg.registration.association = Association::kSemantic;
      } else if (value == "annf") {
        cfg.registration.association = Association::kGlobal;
      } else {
        throw Error(ErrorKind::kConfig, "association must be snnf or annf");
      }
      continue;
    }
    if (key == "weighting") {
      if (value == "uniform") {
        cfg.weighting = EdgeWeighting::kUniform;
      } else if (value == "gradient") {
        cfg.weighting = EdgeWeighting::kGradientMagnitude;
      } else {
        throw Error(ErrorKind::kConfig, "weighting must be uniform or gradient");
      }
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
    it->second.set(cfg, value);
  }
}

/// Every key with its resolved value, sorted by key.
[[nodiscard]] inline io::ConfigMap resolvedConfig(const TrackerConfig& cfg) {
  io::ConfigMap out;
  for (const auto& [key, field] : detail::configFields()) out[key] = field.get(cfg);
  out["association"] = cfg.registration.association == Association::kSemantic ? "snnf" : "annf";
  out["weighting"] = cfg.weighting == EdgeWeighting::kUniform ? "uniform" : "gradient";
  return out;
}

}  // namespace snnf
