#pragma once

// Subcommand bodies for kinest_cli. Each returns the process exit code:
// 0 success, 1 validation failure, 2 property-suite failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kinest/kinest.hpp"

namespace kinest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitPropertyFailure = 2;

struct Common {
  std::string config;    // RunConfig path; empty means paper defaults
  std::string weights;   // checkpoint path; empty means fresh init
  std::string skeleton;  // skeleton path; empty means built-in SMPL-22
  std::optional<double> fps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chunk;
  std::string out;
};

inline RunConfig resolve_config(const Common& c, const RunConfig& fallback = {}) {
  RunConfig rc = c.config.empty() ? fallback : load_run_config(c.config);
  if (c.seed) rc.model.seed = *c.seed;
  if (c.chunk) rc.model.chunk = *c.chunk;
  if (c.fps) rc.fps = *c.fps;
  rc.model.validate();
  return rc;
}

inline kin::KinematicTree resolve_skeleton(const Common& c) {
  return c.skeleton.empty() ? kin::smpl22_tree() : io::load_skeleton(c.skeleton);
}

inline Weights resolve_weights(const Common& c, const ModelConfig& m) {
  if (c.weights.empty()) return model::init_weights(m);
  Weights w = io::load_checkpoint(c.weights);
  if (!w.same_layout(model::init_weights(m))) throw FormatError("checkpoint does not match the configuration");
  return w;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw FormatError("failed writing '" + path + "'");
}

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------

inline int cmd_orders(std::ostream& os) {
  os << "index: " << verify::join(kin::index_order().forward()) << "\n";
  os << "fks: " << verify::join(kin::fks_order().forward()) << "\n";
  os << "uks: " << verify::join(kin::uks_order().forward()) << "\n";
  return kExitOk;
}

inline int cmd_gen_synthetic(const Common& c, std::size_t frames, const std::string& kind, std::ostream& os) {
  const std::uint64_t seed = c.seed.value_or(0);
  const double fps = c.fps.value_or(metrics::kDefaultFps);
  if (frames == 0) throw DomainError("gen-synthetic: --frames must be positive");
  io::SequenceFile s;
  if (kind == "pose") {
    s = synth::synthetic_pose_file(seed, frames, fps);
  } else if (kind == "sparse_input") {
    s = synth::synthetic_sparse(seed, frames, resolve_skeleton(c), fps);
  } else {
    throw FormatError("gen-synthetic: --kind must be pose or sparse_input");
  }
  if (c.out.empty()) {
    io::write_sequence(os, s);
  } else {
    io::save_sequence(c.out, s);
  }
  return kExitOk;
}

inline int cmd_infer(const Common& c, const std::string& in_path, std::ostream& os) {
  const RunConfig rc = resolve_config(c);
  const Weights w = resolve_weights(c, rc.model);
  const io::SequenceFile out = infer::infer_file(io::load_sequence(in_path), rc.model, w);
  if (c.out.empty()) {
    io::write_sequence(os, out);
  } else {
    io::save_sequence(c.out, out);
  }
  return kExitOk;
}

inline int cmd_eval(const Common& c, const std::string& pred_path, const std::string& gt_path, std::ostream& os) {
  const io::SequenceFile pred = io::load_sequence(pred_path);
  const io::SequenceFile gt = io::load_sequence(gt_path);
  const double fps = c.fps.value_or(gt.fps);
  const auto report =
      metrics::evaluate(io::to_pose_sequence(pred), io::to_pose_sequence(gt), resolve_skeleton(c), fps);
  os << report.to_text();
  if (!c.out.empty()) write_text(c.out, report.to_rows());
  return kExitOk;
}

inline int cmd_verify(const verify::VerifyOptions& opt, std::ostream& os) {
  const auto results = verify::run_all(opt);
  for (const auto& r : results) os << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
  const bool ok = verify::all_passed(results);
  os << (ok ? "all properties passed\n" : "property suite FAILED\n");
  return ok ? kExitOk : kExitPropertyFailure;
}

struct TrainArgs {
  std::string data;  // pose file with the target motion
  std::size_t iters = 500;
  std::string trace;  // defaults to <out>.trace.csv
};

/// Trains on the first seq_len frames of a pose file. Sparse inputs are
/// derived from that pose through the skeleton.
inline int cmd_train_micro(const Common& c, const TrainArgs& a, std::ostream& os) {
  RunConfig fallback;
  fallback.model = micro_config();
  const RunConfig rc = resolve_config(c, fallback);
  const io::SequenceFile data = io::load_sequence(a.data);
  PoseSequence target = io::to_pose_sequence(data);
  if (target.frames() < rc.model.seq_len) {
    throw DimensionError("train-micro: data has " + std::to_string(target.frames()) + " frames, need " +
                         std::to_string(rc.model.seq_len));
  }
  if (target.frames() > rc.model.seq_len) {
    PoseSequence cut(rc.model.seq_len);
    std::copy_n(target.values().begin(), cut.size(), cut.values().begin());
    if (target.has_root_translation()) {
      const auto& r = target.root_translation();
      cut.set_root_translation({r.begin(), r.begin() + static_cast<std::ptrdiff_t>(rc.model.seq_len)});
    }
    target = std::move(cut);
  }
  const model::Mat x = infer::input_matrix(synth::sparse_from_pose(target, resolve_skeleton(c), data.fps));
  const Weights init = resolve_weights(c, rc.model);

  train::SpsaOptions opt;
  opt.iters = a.iters;
  opt.seed = rc.model.seed;
  const auto result = train::train_micro(rc.model, init, x, target, rc.loss, opt);

  std::string trace = "step,loss\n";
  for (std::size_t k = 0; k < result.trace.size(); ++k)
    trace += std::to_string(k) + "," + fmt_g(result.trace[k]) + "\n";
  os << "parameters: " << init.parameter_count() << "\n";
  os << "initial_loss: " << fmt_g(result.initial_loss) << "\n";
  os << "smoothed_final_loss: " << fmt_g(result.smoothed_final(opt.smooth_window)) << "\n";
  if (!c.out.empty()) {
    io::save_checkpoint(c.out, result.weights);
    write_text(a.trace.empty() ? c.out + ".trace.csv" : a.trace, trace);
  } else if (!a.trace.empty()) {
    write_text(a.trace, trace);
  }
  return kExitOk;
}

inline int cmd_bench(const Common& c, const bench::BenchOptions& base, std::ostream& os) {
  bench::BenchOptions opt = base;
  if (c.chunk) opt.chunk = *c.chunk;
  if (c.seed) opt.seed = *c.seed;
  const auto rep = bench::run(opt);
  os << rep.to_text();
  if (!c.out.empty()) write_text(c.out, rep.to_text());
  return rep.all_agree() ? kExitOk : kExitInvalid;
}

}  // namespace kinest::cli
