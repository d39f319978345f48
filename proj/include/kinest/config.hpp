#pragma once

// Model hyperparameters and the key=value run configuration file.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "kinest/error.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/losses.hpp"
#include "kinest/metrics.hpp"
#include "kinest/ssd.hpp"

namespace kinest {

inline constexpr std::size_t kInputDim = 3 * (3 + 6 + 3 + 6);

struct ModelConfig {
  std::size_t n_tfm = 2;
  std::size_t m_skfm = 2;
  std::size_t embed_dim = 256;
  std::size_t joints = kin::kNumJoints;
  std::size_t joint_dim = 64;
  std::size_t seq_len = 96;
  std::size_t input_dim = kInputDim;
  std::size_t gma_hidden = 512;
  std::size_t gma_heads = 8;
  std::size_t ssd_state = ssd::kDefaultStateDim;
  std::size_t conv_width = 4;
  std::size_t chunk = ssd::kDefaultChunk;
  kin::ScanStrategy scan_strategy = kin::ScanStrategy::kUks;
  bool tie_backward = false;
  bool gma_positional = false;
  std::uint64_t seed = 0;

  std::size_t output_dim() const { return joints * 6; }
  std::size_t mixed_hidden() const { return joints * joint_dim; }

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw DomainError(std::string("ModelConfig: ") + what);
    };
    need(joints == kin::kNumJoints, "joints must be 22");
    need(input_dim == kInputDim, "input_dim must be 54");
    need(embed_dim > 0 && joint_dim > 0 && seq_len > 0, "dimensions must be positive");
    need(gma_hidden > 0 && gma_heads > 0 && gma_hidden % gma_heads == 0,
         "gma_hidden must be a positive multiple of gma_heads");
    need(ssd_state > 0 && conv_width > 0 && chunk > 0, "ssd_state, conv_width and chunk must be positive");
    need(!gma_positional || gma_hidden % 2 == 0, "positional encoding needs an even gma_hidden");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// Paper-scale defaults.
inline ModelConfig paper_config() { return {}; }

/// Desk-scale configuration used for smoke tests and micro training.
inline ModelConfig micro_config() {
  ModelConfig c;
  c.n_tfm = 1;
  c.m_skfm = 1;
  c.embed_dim = 16;
  c.joint_dim = 4;
  c.seq_len = 8;
  c.gma_hidden = 16;
  c.gma_heads = 2;
  c.ssd_state = 4;
  c.chunk = 8;
  return c;
}

inline std::string to_string(kin::ScanStrategy s) {
  switch (s) {
    case kin::ScanStrategy::kIndex: return "index";
    case kin::ScanStrategy::kFks: return "fks";
    case kin::ScanStrategy::kUks: return "uks";
  }
  return "?";
}

inline kin::ScanStrategy parse_scan_strategy(std::string_view s) {
  if (s == "index") return kin::ScanStrategy::kIndex;
  if (s == "fks") return kin::ScanStrategy::kFks;
  if (s == "uks") return kin::ScanStrategy::kUks;
  throw FormatError("unknown scan strategy '" + std::string(s) + "' (expected index|fks|uks)");
}

/// Everything a command needs: model, loss weights and evaluation rate.
struct RunConfig {
  ModelConfig model;
  loss::LossWeights loss;
  double fps = metrics::kDefaultFps;

  bool operator==(const RunConfig& o) const {
    return model == o.model && loss.alpha == o.loss.alpha && loss.beta == o.loss.beta &&
           loss.delta == o.loss.delta && fps == o.fps;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  is.imbue(std::locale::classic());
  double out = 0.0;
  if (!(is >> out) || !is.eof() || !std::isfinite(out)) {
    throw FormatError("config: '" + key + "' expects a finite number, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("config: '" + key + "' expects true|false, got '" + v + "'");
}

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and
/// duplicate keys are rejected, and the result is validated.
inline RunConfig parse_run_config(std::istream& in) {
  RunConfig rc;
  auto& m = rc.model;
  std::map<std::string, std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string val = detail::trim(std::string_view(t).substr(eq + 1));
    if (!seen.emplace(key, val).second) throw FormatError("config: duplicate key '" + key + "'");

    auto size = [&] { return static_cast<std::size_t>(detail::parse_u64(key, val)); };
    if (key == "n_tfm") m.n_tfm = size();
    else if (key == "m_skfm") m.m_skfm = size();
    else if (key == "embed_dim") m.embed_dim = size();
    else if (key == "joints") m.joints = size();
    else if (key == "joint_dim") m.joint_dim = size();
    else if (key == "seq_len") m.seq_len = size();
    else if (key == "input_dim") m.input_dim = size();
    else if (key == "gma_hidden") m.gma_hidden = size();
    else if (key == "gma_heads") m.gma_heads = size();
    else if (key == "ssd_state") m.ssd_state = size();
    else if (key == "conv_width") m.conv_width = size();
    else if (key == "chunk") m.chunk = size();
    else if (key == "scan_strategy") m.scan_strategy = parse_scan_strategy(val);
    else if (key == "tie_backward") m.tie_backward = detail::parse_bool(key, val);
    else if (key == "gma_positional") m.gma_positional = detail::parse_bool(key, val);
    else if (key == "seed") m.seed = detail::parse_u64(key, val);
    else if (key == "alpha") rc.loss.alpha = detail::parse_real(key, val);
    else if (key == "beta") rc.loss.beta = detail::parse_real(key, val);
    else if (key == "delta") rc.loss.delta = detail::parse_real(key, val);
    else if (key == "fps") rc.fps = detail::parse_real(key, val);
    else throw FormatError("config: unknown key '" + key + "'");
  }
  m.validate();
  if (rc.loss.alpha < 0.0 || rc.loss.beta < 0.0 || rc.loss.delta < 0.0) {
    throw DomainError("config: loss weights must be non-negative");
  }
  if (!(rc.fps > 0.0)) throw DomainError("config: fps must be positive");
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  return parse_run_config(in);
}

inline std::string serialize_run_config(const RunConfig& rc) {
  const auto& m = rc.model;
  std::ostringstream os;
  os << "n_tfm = " << m.n_tfm << "\n"
     << "m_skfm = " << m.m_skfm << "\n"
     << "embed_dim = " << m.embed_dim << "\n"
     << "joints = " << m.joints << "\n"
     << "joint_dim = " << m.joint_dim << "\n"
     << "seq_len = " << m.seq_len << "\n"
     << "input_dim = " << m.input_dim << "\n"
     << "gma_hidden = " << m.gma_hidden << "\n"
     << "gma_heads = " << m.gma_heads << "\n"
     << "ssd_state = " << m.ssd_state << "\n"
     << "conv_width = " << m.conv_width << "\n"
     << "chunk = " << m.chunk << "\n"
     << "scan_strategy = " << to_string(m.scan_strategy) << "\n"
     << "tie_backward = " << (m.tie_backward ? "true" : "false") << "\n"
     << "gma_positional = " << (m.gma_positional ? "true" : "false") << "\n"
     << "seed = " << m.seed << "\n"
     << "alpha = " << detail::fmt_real(rc.loss.alpha) << "\n"
     << "beta = " << detail::fmt_real(rc.loss.beta) << "\n"
     << "delta = " << detail::fmt_real(rc.loss.delta) << "\n"
     << "fps = " << detail::fmt_real(rc.fps) << "\n";
  return os.str();
}

}  // namespace kinest
