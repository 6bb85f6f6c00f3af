// pergrad command-line tool.
//
//   pergrad verify     randomized trick-vs-oracle and finite-difference checks
//   pergrad bench      trick vs naive flops and wall-clock, JSON or CSV report
//   pergrad clip-demo  per-example clipping, norms before and after
//
// Exit codes: 0 success, 1 verification or I/O failure, 2 usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pergrad/bench.hpp"
#include "pergrad/serialize.hpp"
#include "pergrad/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ProblemOptions {
  std::vector<std::size_t> dims{784, 512, 512, 10};
  std::size_t batch = 64;
  std::string activation = "relu";
  std::string loss = "softmax_cross_entropy";
  std::uint64_t seed = 42;
  std::string net_path;
  std::string save_net_path;
};

void add_problem_options(CLI::App* cmd, ProblemOptions& o) {
  cmd->add_option("--dims", o.dims, "Layer widths, input first")->delimiter(',');
  cmd->add_option("--batch", o.batch, "Minibatch size m");
  cmd->add_option("--activation", o.activation, "Hidden-layer activation");
  cmd->add_option("--loss", o.loss, "Loss function");
  cmd->add_option("--seed", o.seed, "Seed for weights and data");
  cmd->add_option("--net", o.net_path, "Load the network from a JSON document instead");
  cmd->add_option("--save-net", o.save_net_path, "Write the network used as JSON");
}

pergrad::BenchConfig to_config(const ProblemOptions& o) {
  pergrad::BenchConfig cfg;
  cfg.layer_dims = o.dims;
  cfg.batch_size = o.batch;
  cfg.activation = pergrad::parse_activation(o.activation);
  cfg.loss = pergrad::parse_loss(o.loss);
  cfg.seed = o.seed;
  return cfg;
}

// Builds the problem; with --net the config echo is rewritten from the file.
pergrad::BenchProblem load_problem(const ProblemOptions& o, pergrad::BenchConfig& cfg) {
  if (o.net_path.empty()) {
    pergrad::validate(cfg, /*timing=*/false);
    return pergrad::make_bench_problem(cfg);
  }
  std::ifstream in(o.net_path);
  if (!in) throw std::runtime_error("cannot read " + o.net_path);
  auto net = pergrad::network_from_json(pergrad::json::parse(in));
  pergrad::validate(net);
  cfg.layer_dims = {net.input_dim()};
  for (const auto& l : net.layers) cfg.layer_dims.push_back(l.out_dim);
  cfg.activation = net.layers.front().activation;
  cfg.loss = net.loss;
  auto batch = pergrad::gen_synthetic(cfg.batch_size, net.input_dim(), net.output_dim(),
                                      net.loss, pergrad::derive_seed(cfg.seed, 2));
  return {std::move(net), std::move(batch)};
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  out.close();
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  return true;
}

int cmd_verify(const pergrad::VerifyOptions& opts) {
  const auto summary = pergrad::run_verify(opts);
  std::cout << "seed: " << opts.seed << "\n" << summary.text();
  return summary.ok() ? kExitOk : kExitFailure;
}

int cmd_bench(ProblemOptions& po, std::size_t trials, const std::vector<std::string>& methods,
              const std::string& out_path, const std::string& format) {
  auto cfg = to_config(po);
  cfg.trials = trials;
  cfg.methods = methods;
  pergrad::validate(cfg, /*timing=*/true);
  const auto problem = load_problem(po, cfg);
  if (!po.save_net_path.empty() &&
      !write_file(po.save_net_path, pergrad::network_to_json(problem.net).dump(2) + "\n")) {
    return kExitFailure;
  }
  const auto report = pergrad::run_bench(cfg, problem);
  const std::string text = format == "csv" ? pergrad::report_to_csv(report)
                                           : pergrad::report_to_json(report).dump(2) + "\n";
  if (!write_file(out_path, text)) return kExitFailure;
  for (const auto& r : report.results) {
    std::cout << r.method << ": median " << r.wall_ns_median << " ns, flops "
              << r.flops_forward << " fwd + " << r.flops_backward << " bwd + "
              << r.flops_norms_extra << " norms, s checksum " << r.s_checksum << "\n";
  }
  if (!report.checksums_agree) {
    std::cerr << "error: s checksums disagree between methods\n";
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_clip_demo(ProblemOptions& po, double max_norm, const std::string& out_path) {
  auto cfg = to_config(po);
  const auto problem = load_problem(po, cfg);
  const auto result = pergrad::run_clip_demo(problem.net, problem.batch, max_norm);
  if (!write_file(out_path, pergrad::clip_to_json(result).dump(2) + "\n")) return kExitFailure;
  std::size_t clipped = 0;
  for (double f : result.factors) clipped += f < 1.0 ? 1 : 0;
  std::cout << clipped << " of " << result.factors.size() << " examples clipped to "
            << max_norm << "\n";
  if (!result.within_limit()) {
    std::cerr << "error: a clipped norm exceeds max_norm\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-example gradient norms in one backward pass"};
  app.require_subcommand(1);

  pergrad::VerifyOptions vopts;
  auto* verify = app.add_subcommand("verify", "Randomized correctness checks");
  verify->add_option("--cases", vopts.cases, "Number of random cases");
  verify->add_option("--seed", vopts.seed, "Base seed");
  verify->add_option("--max-dim", vopts.limits.max_dim, "Largest layer width");
  verify->add_option("--max-batch", vopts.limits.max_batch, "Largest minibatch");
  verify->add_option("--max-layers", vopts.limits.max_layers, "Deepest network");

  ProblemOptions bench_opts;
  std::size_t trials = 10;
  std::vector<std::string> methods{"trick", "naive"};
  std::string bench_out;
  std::string format = "json";
  auto* bench = app.add_subcommand("bench", "Trick vs naive benchmark");
  add_problem_options(bench, bench_opts);
  bench->add_option("--trials", trials, "Timed trials per method (at least 3)");
  bench->add_option("--methods", methods, "Subset of trick,naive")->delimiter(',');
  bench->add_option("--out", bench_out, "Report path")->required();
  bench->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  ProblemOptions clip_opts;
  double max_norm = 1.0;
  std::string clip_out;
  auto* clip = app.add_subcommand("clip-demo", "Clip per-example gradients to a norm");
  add_problem_options(clip, clip_opts);
  clip->add_option("--max-norm", max_norm, "Per-example norm limit")->required();
  clip->add_option("--out", clip_out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(vopts);
    if (*bench) return cmd_bench(bench_opts, trials, methods, bench_out, format);
    if (*clip) return cmd_clip_demo(clip_opts, max_norm, clip_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
