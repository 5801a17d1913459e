#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snnf {

/// Coarse error classes. The CLI maps these onto exit codes.
enum class ErrorKind {
  kDomain,          // argument outside the mathematical domain (e.g. d <= 0)
  kBehindCamera,    // projection of a point with z <= z_min
  kDimension,       // image sizes mismatch or too small
  kConfig,          // invalid thresholds / parameters
  kEmptyCloud,      // nothing to sample
  kEmptySeeds,      // nearest-neighbor field without seeds
  kOutOfBounds,     // lookup outside the grid
  kNoMatch,         // lookup on an empty per-class field
  kRankDeficient,   // fewer than 6 usable residual rows
  kNumeric,         // non-finite energy or failed solve
  kFormat,          // binary container errors
  kParse,           // text file errors
  kIo,              // missing / unreadable files
  kUndefinedMetric  // metric with an empty denominator
};

inline const char* toString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kBehindCamera: return "behind-camera";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kEmptyCloud: return "empty-cloud";
    case ErrorKind::kEmptySeeds: return "empty-seeds";
    case ErrorKind::kOutOfBounds: return "out-of-bounds";
    case ErrorKind::kNoMatch: return "no-match";
    case ErrorKind::kRankDeficient: return "rank-deficient";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(toString(kind)) + " error: " + what),
        kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Binary container error carrying the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::kFormat,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Text parse error carrying a 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorKind::kParse, what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace snnf
