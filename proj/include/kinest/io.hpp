#pragma once

// On-disk formats: text sequence files, skeleton files and binary weight
// checkpoints.
//
// Sequence file (text):
//   KINEST_SEQ <version> <kind> <frames> <columns> <fps>
//   followed by <frames> lines of <columns> whitespace-separated values,
//   written with 9 significant digits (exact for 32-bit floats).
//   kind = sparse_input (54 columns) | pose (132, or 135 with root xyz).
//
// Skeleton file (text): one "joint parent ox oy oz" line per joint,
//   parent -1 for the root, offsets in meters; '#' starts a comment.
//
// Checkpoint (binary, little-endian):
//   "KINESTCK" | u32 version | u32 count |
//   count x ( u32 name_len | name | u32 rank | rank x u64 dim | f32 data )
//   Tensors are stored in lexicographic name order.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "kinest/error.hpp"
#include "kinest/kinematics.hpp"
#include "kinest/pose.hpp"
#include "kinest/weights.hpp"

namespace kinest::io {

inline constexpr int kSequenceVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "KINESTCK";
inline constexpr std::size_t kPoseColumns = kin::kNumJoints * 6;
inline constexpr std::size_t kPoseColumnsWithRoot = kPoseColumns + 3;
inline constexpr std::size_t kSparseColumns = 3 * (3 + 6 + 3 + 6);

enum class SequenceKind { kSparseInput, kPose };

inline std::string to_string(SequenceKind k) { return k == SequenceKind::kPose ? "pose" : "sparse_input"; }

struct SequenceFile {
  int version = kSequenceVersion;
  SequenceKind kind = SequenceKind::kPose;
  std::size_t frames = 0;
  std::size_t columns = 0;
  double fps = 60.0;
  std::vector<float> values;  // frames x columns, row-major

  float at(std::size_t l, std::size_t c) const { return values[l * columns + c]; }
  float& at(std::size_t l, std::size_t c) { return values[l * columns + c]; }

  void validate() const {
    if (version != kSequenceVersion) throw FormatError("sequence: unsupported version " + std::to_string(version));
    if (kind == SequenceKind::kSparseInput && columns != kSparseColumns) {
      throw FormatError("sequence: sparse_input needs 54 columns, got " + std::to_string(columns));
    }
    if (kind == SequenceKind::kPose && columns != kPoseColumns && columns != kPoseColumnsWithRoot) {
      throw FormatError("sequence: pose needs 132 or 135 columns, got " + std::to_string(columns));
    }
    if (values.size() != frames * columns) throw FormatError("sequence: value count does not match header");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw FormatError("sequence: fps must be positive");
    for (float v : values)
      if (!std::isfinite(v)) throw FormatError("sequence: non-finite value");
  }

  bool operator==(const SequenceFile& o) const {
    return version == o.version && kind == o.kind && frames == o.frames && columns == o.columns &&
           std::memcmp(&fps, &o.fps, sizeof fps) == 0 && values.size() == o.values.size() &&
           std::memcmp(values.data(), o.values.data(), values.size() * sizeof(float)) == 0;
  }
};

namespace detail {

inline std::string fmt9(float v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string strip_comment(std::string line) {
  if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
  return line;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sequence files

inline void write_sequence(std::ostream& os, const SequenceFile& s) {
  s.validate();
  os << "KINEST_SEQ " << s.version << ' ' << to_string(s.kind) << ' ' << s.frames << ' ' << s.columns << ' '
     << detail::fmt17(s.fps) << '\n';
  std::string line;
  for (std::size_t l = 0; l < s.frames; ++l) {
    line.clear();
    for (std::size_t c = 0; c < s.columns; ++c) {
      if (c) line += ' ';
      line += detail::fmt9(s.at(l, c));
    }
    line += '\n';
    os << line;
  }
}

inline SequenceFile read_sequence(std::istream& is) {
  is.imbue(std::locale::classic());
  SequenceFile s;
  std::string magic, kind;
  if (!(is >> magic) || magic != "KINEST_SEQ") throw FormatError("sequence: missing KINEST_SEQ header");
  if (!(is >> s.version >> kind >> s.frames >> s.columns >> s.fps)) throw FormatError("sequence: malformed header");
  if (kind == "pose") s.kind = SequenceKind::kPose;
  else if (kind == "sparse_input") s.kind = SequenceKind::kSparseInput;
  else throw FormatError("sequence: unknown kind '" + kind + "'");

  std::string line;
  std::getline(is, line);  // rest of header line
  s.values.reserve(s.frames * s.columns);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    line = detail::strip_comment(line);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    std::size_t count = 0;
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const float v = std::strtof(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw FormatError("sequence: bad number '" + tok + "'");
      s.values.push_back(v);
      ++count;
    }
    if (count != s.columns) {
      throw FormatError("sequence: row " + std::to_string(rows) + " has " + std::to_string(count) + " columns, expected " +
                        std::to_string(s.columns));
    }
    ++rows;
  }
  if (rows != s.frames) {
    throw FormatError("sequence: header says " + std::to_string(s.frames) + " frames, found " + std::to_string(rows));
  }
  s.validate();
  return s;
}

inline SequenceFile load_sequence(const std::string& path) {
  auto in = detail::open_in(path);
  return read_sequence(in);
}

inline void save_sequence(const std::string& path, const SequenceFile& s) {
  auto out = detail::open_out(path);
  write_sequence(out, s);
  if (!out) throw FormatError("failed writing '" + path + "'");
}

inline PoseSequence to_pose_sequence(const SequenceFile& s) {
  if (s.kind != SequenceKind::kPose) throw FormatError("expected a pose sequence file");
  PoseSequence p(s.frames);
  for (std::size_t l = 0; l < s.frames; ++l)
    for (std::size_t c = 0; c < kPoseColumns; ++c) p.values()[l * kPoseColumns + c] = s.at(l, c);
  if (s.columns == kPoseColumnsWithRoot) {
    std::vector<Eigen::Vector3d> root(s.frames);
    for (std::size_t l = 0; l < s.frames; ++l)
      root[l] = {s.at(l, kPoseColumns), s.at(l, kPoseColumns + 1), s.at(l, kPoseColumns + 2)};
    p.set_root_translation(std::move(root));
  }
  return p;
}

/// Values are rounded to 32-bit floats.
inline SequenceFile from_pose_sequence(const PoseSequence& p, double fps) {
  if (p.joints() != kin::kNumJoints) throw DimensionError("pose files hold 22 joints");
  SequenceFile s;
  s.kind = SequenceKind::kPose;
  s.frames = p.frames();
  s.columns = p.has_root_translation() ? kPoseColumnsWithRoot : kPoseColumns;
  s.fps = fps;
  s.values.resize(s.frames * s.columns);
  for (std::size_t l = 0; l < s.frames; ++l) {
    for (std::size_t c = 0; c < kPoseColumns; ++c) s.at(l, c) = static_cast<float>(p.values()[l * kPoseColumns + c]);
    if (p.has_root_translation())
      for (int k = 0; k < 3; ++k) s.at(l, kPoseColumns + k) = static_cast<float>(p.root_translation()[l][k]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Skeleton files

inline kin::KinematicTree read_skeleton(std::istream& is) {
  is.imbue(std::locale::classic());
  std::vector<int> parent(kin::kNumJoints, -2);
  std::vector<Eigen::Vector3d> offset(kin::kNumJoints, Eigen::Vector3d::Zero());
  std::vector<bool> seen(kin::kNumJoints, false);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    line = detail::strip_comment(line);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    long joint = 0, par = 0;
    double x = 0, y = 0, z = 0;
    std::string extra;
    if (!(ls >> joint >> par >> x >> y >> z) || (ls >> extra)) {
      throw FormatError("skeleton: expected 'joint parent ox oy oz', got '" + line + "'");
    }
    if (joint < 0 || joint >= static_cast<long>(kin::kNumJoints)) throw FormatError("skeleton: joint index out of range");
    const auto j = static_cast<std::size_t>(joint);
    if (seen[j]) throw FormatError("skeleton: joint " + std::to_string(joint) + " listed twice");
    seen[j] = true;
    parent[j] = static_cast<int>(par);
    offset[j] = {x, y, z};
    ++rows;
  }
  if (rows != kin::kNumJoints) throw FormatError("skeleton: expected 22 joints, found " + std::to_string(rows));
  try {
    return kin::KinematicTree(std::move(parent), std::move(offset));
  } catch (const DomainError& e) {
    throw FormatError(std::string("skeleton: ") + e.what());
  }
}

inline void write_skeleton(std::ostream& os, const kin::KinematicTree& tree) {
  os << "# joint parent offset_x offset_y offset_z (meters)\n";
  for (std::size_t j = 0; j < tree.size(); ++j) {
    const auto& o = tree.offset(j);
    os << j << ' ' << tree.parent(j) << ' ' << detail::fmt17(o.x()) << ' ' << detail::fmt17(o.y()) << ' '
       << detail::fmt17(o.z()) << '\n';
  }
}

inline kin::KinematicTree load_skeleton(const std::string& path) {
  auto in = detail::open_in(path);
  return read_skeleton(in);
}

inline void save_skeleton(const std::string& path, const kin::KinematicTree& tree) {
  auto out = detail::open_out(path);
  write_skeleton(out, tree);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string_view buf) : buf_(buf) {}
  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
  }
  std::string_view buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Weights& w) {
  std::string out(kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(w.tensors().size()));
  for (const auto& [name, t] : w.tensors()) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put_u64(out, d);
    for (float v : t.data) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline Weights deserialize_checkpoint(std::string_view buf) {
  detail::Reader r(buf);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) throw FormatError("checkpoint: bad magic");
  const auto version = r.uint(4);
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = r.uint(4);
  Weights w;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.uint(4);
    std::string name(r.bytes(name_len));
    const auto rank = r.uint(4);
    if (rank > 8) throw FormatError("checkpoint: implausible rank for '" + name + "'");
    Tensor t;
    std::size_t n = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.uint(8));
      n *= t.dims.back();
    }
    if (n > (buf.size() / 4)) throw FormatError("checkpoint: tensor '" + name + "' larger than file");
    t.data.resize(n);
    for (auto& v : t.data) v = std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4)));
    w.add(name, std::move(t));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return w;
}

inline void save_checkpoint(const std::string& path, const Weights& w) {
  auto out = detail::open_out(path, std::ios::binary);
  const std::string bytes = serialize_checkpoint(w);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path + "'");
}

inline Weights load_checkpoint(const std::string& path) {
  auto in = detail::open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace kinest::io
