#pragma once

// Whole-file inference with fixed-length windows.
//
// Frames are split into consecutive non-overlapping windows of seq_len.
// A final partial window of r frames is left-padded with (seq_len - r)
// copies of its own first frame; only its last r outputs are kept.

#include <cstddef>
#include <vector>

#include "kinest/config.hpp"
#include "kinest/error.hpp"
#include "kinest/io.hpp"
#include "kinest/model.hpp"
#include "kinest/pose.hpp"
#include "kinest/weights.hpp"

namespace kinest::infer {

inline model::Mat input_matrix(const io::SequenceFile& s) {
  if (s.kind != io::SequenceKind::kSparseInput) throw FormatError("expected a sparse_input sequence file");
  s.validate();
  return Eigen::Map<const model::Mat>(s.values.data(), static_cast<Eigen::Index>(s.frames),
                                      static_cast<Eigen::Index>(s.columns));
}

struct Window {
  std::size_t start = 0;  // first real frame
  std::size_t count = 0;  // real frames in the window
  std::size_t pad = 0;    // leading repeated frames
};

inline std::vector<Window> plan_windows(std::size_t frames, std::size_t window) {
  kinest::detail::require_domain(window > 0, "plan_windows: window length must be positive");
  std::vector<Window> out;
  for (std::size_t s = 0; s < frames; s += window) {
    const std::size_t n = std::min(window, frames - s);
    out.push_back({s, n, window - n});
  }
  return out;
}

/// frames x input_dim -> frames x 132.
inline model::Mat run_windows(const model::Mat& x, const ModelConfig& c, const Weights& w) {
  kinest::detail::require_dims(x.rows() > 0, "infer: empty input");
  kinest::detail::require_dims(static_cast<std::size_t>(x.cols()) == c.input_dim,
                               "infer: input has " + std::to_string(x.cols()) + " columns, config expects " +
                                   std::to_string(c.input_dim));
  const auto len = static_cast<Eigen::Index>(c.seq_len);
  model::Mat y(x.rows(), static_cast<Eigen::Index>(c.output_dim()));
  model::Mat win(len, x.cols());
  for (const Window& wd : plan_windows(static_cast<std::size_t>(x.rows()), c.seq_len)) {
    const auto start = static_cast<Eigen::Index>(wd.start);
    const auto count = static_cast<Eigen::Index>(wd.count);
    const auto pad = static_cast<Eigen::Index>(wd.pad);
    for (Eigen::Index r = 0; r < pad; ++r) win.row(r) = x.row(start);
    win.bottomRows(count) = x.middleRows(start, count);
    const model::Mat out = model::kinest_forward(win, c, w);
    y.middleRows(start, count) = out.bottomRows(count);
  }
  return y;
}

/// Sparse input file -> pose file (no root translation, same fps).
inline io::SequenceFile infer_file(const io::SequenceFile& in, const ModelConfig& c, const Weights& w) {
  const model::Mat y = run_windows(input_matrix(in), c, w);
  io::SequenceFile out;
  out.kind = io::SequenceKind::kPose;
  out.frames = static_cast<std::size_t>(y.rows());
  out.columns = static_cast<std::size_t>(y.cols());
  out.fps = in.fps;
  out.values.assign(y.data(), y.data() + y.size());
  out.validate();
  return out;
}

}  // namespace kinest::infer
