// kinest_cli: command-line front end.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

std::vector<int> parse_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kinest;
  CLI::App app{"Sparse-signal full-body pose estimation toolkit"};
  app.require_subcommand(1);

  cli::Common common;
  double fps = 0.0;
  std::uint64_t seed = 0;
  std::size_t chunk = 0;
  auto add_common = [&](CLI::App* sub, bool model_flags) {
    sub->add_option("--out", common.out, "Output path (stdout when omitted, where applicable)");
    sub->add_option("--skeleton", common.skeleton, "Skeleton file (built-in SMPL-22 when omitted)");
    sub->add_option("--fps", fps, "Frame rate")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Random seed");
    if (model_flags) {
      sub->add_option("--config", common.config, "Run configuration file");
      sub->add_option("--weights", common.weights, "Checkpoint file");
      sub->add_option("--chunk", chunk, "SSD chunk length")->check(CLI::PositiveNumber);
    }
  };

  auto* orders = app.add_subcommand("orders", "Print the index, FKS and UKS joint scan orders");

  std::size_t frames = 96;
  std::string kind = "pose";
  auto* gen = app.add_subcommand("gen-synthetic", "Write a deterministic synthetic sequence");
  add_common(gen, false);
  gen->add_option("--frames", frames, "Number of frames");
  gen->add_option("--kind", kind, "pose | sparse_input")->check(CLI::IsMember({"pose", "sparse_input"}));

  std::string in_path;
  auto* infer = app.add_subcommand("infer", "Run the network over a sparse input file");
  add_common(infer, true);
  infer->add_option("--in", in_path, "Sparse input file")->required();

  std::string pred_path, gt_path;
  auto* eval = app.add_subcommand("eval", "Compare a predicted pose file with ground truth");
  add_common(eval, false);
  eval->add_option("--pred", pred_path, "Predicted pose file")->required();
  eval->add_option("--gt", gt_path, "Ground-truth pose file")->required();

  verify::VerifyOptions vopt;
  std::string fks_override, uks_override;
  auto* ver = app.add_subcommand("verify", "Run the property suite");
  add_common(ver, false);
  ver->add_option("--fks-override", fks_override, "Comma-separated FKS list to test instead of the built-in one");
  ver->add_option("--uks-override", uks_override, "Comma-separated UKS list to test instead of the built-in one");

  cli::TrainArgs targs;
  auto* train = app.add_subcommand("train-micro", "SPSA training of a micro configuration");
  add_common(train, true);
  train->add_option("--data", targs.data, "Pose file with the target motion")->required();
  train->add_option("--iters", targs.iters, "Iterations");
  train->add_option("--trace", targs.trace, "Loss trace CSV (default <out>.trace.csv)");

  bench::BenchOptions bopt;
  auto* bench = app.add_subcommand("bench", "Time the matrix form against the chunked scan");
  add_common(bench, false);
  bench->add_option("--chunk", chunk, "Chunk length")->check(CLI::PositiveNumber);
  bench->add_option("--lengths", bopt.lengths, "Sequence lengths")->delimiter(',');
  bench->add_option("--trials", bopt.trials, "Timed trials per length")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitInvalid;
  }

  auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
  CLI::App* active = app.get_subcommands().front();
  if (active != orders) {
    if (given(active, "--fps")) common.fps = fps;
    if (given(active, "--seed")) common.seed = seed;
    if (active->get_option_no_throw("--chunk") != nullptr && given(active, "--chunk")) common.chunk = chunk;
  }

  try {
    if (active == orders) return cli::cmd_orders(std::cout);
    if (active == gen) return cli::cmd_gen_synthetic(common, frames, kind, std::cout);
    if (active == infer) return cli::cmd_infer(common, in_path, std::cout);
    if (active == eval) return cli::cmd_eval(common, pred_path, gt_path, std::cout);
    if (active == ver) {
      if (common.seed) vopt.seed = *common.seed;
      if (!common.skeleton.empty()) vopt.skeleton = io::load_skeleton(common.skeleton);
      if (!fks_override.empty()) vopt.fks = parse_list(fks_override);
      if (!uks_override.empty()) vopt.uks = parse_list(uks_override);
      return cli::cmd_verify(vopt, std::cout);
    }
    if (active == train) return cli::cmd_train_micro(common, targs, std::cout);
    if (active == bench) return cli::cmd_bench(common, bopt, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInvalid;
  }
  return cli::kExitInvalid;
}
