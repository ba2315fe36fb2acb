#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "foresight/bench.hpp"
#include "foresight/config.hpp"
#include "foresight/error.hpp"
#include "foresight/harness.hpp"
#include "foresight/mutual_information.hpp"
#include "foresight/pipeline.hpp"
#include "foresight/policy_graph.hpp"
#include "foresight/trace.hpp"

namespace fs = std::filesystem;
using namespace foresight;

namespace {

struct PipelineFlags {
  std::string config;
  std::string out;
  std::string policy_graph;
  std::string mi_report;
  std::string snapshot_out;
  std::string snapshot_in;
  bool refine = false;
  std::optional<double> tau;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--config", f.config, "Pipeline config (JSON)")->required();
  cmd->add_option("--out", f.out, "Explanation stream (JSONL); stdout when omitted");
  cmd->add_option("--policy-graph", f.policy_graph, "Write the policy graph as DOT");
  cmd->add_option("--mi-report", f.mi_report, "Write the MI report as CSV");
  cmd->add_option("--snapshot-out", f.snapshot_out, "Write KG/sketch snapshots to this directory");
  cmd->add_option("--snapshot-in", f.snapshot_in, "Warm-start from a snapshot directory");
  cmd->add_flag("--refine", f.refine, "Enable action refinement");
  cmd->add_option("--tau", f.tau, "Absolute refinement threshold");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open output file: " + path);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

// Runs records from `in` through the pipeline; one explanation line per record.
void run_stream(const PipelineFlags& f, std::istream& in) {
  Pipeline p(load_config(f.config));
  if (f.refine) p.set_refine(true);
  if (f.tau) p.set_tau(f.tau);
  if (!f.snapshot_in.empty()) p.load_snapshot(f.snapshot_in);

  std::ofstream file;
  if (!f.out.empty()) file = open_out(f.out);
  std::ostream& out = f.out.empty() ? std::cout : file;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const TraceRecord r = parse_trace_line(line, line_no, p.config(), p.last_t());
    ExplanationRecord e;
    try {
      e = p.process(r);
    } catch (const ValidationError& err) {
      throw ValidationError("pipeline: line " + std::to_string(line_no) + " (t=" + std::to_string(r.t) +
                            "): " + err.what());
    } catch (const std::exception& err) {
      throw std::runtime_error("pipeline: line " + std::to_string(line_no) + " (t=" + std::to_string(r.t) +
                               "): " + err.what());
    }
    out << p.to_json(e).dump() << '\n';
    out.flush();
  }
  if (!out) throw std::runtime_error("failed writing the explanation stream");

  if (!f.policy_graph.empty()) write_text(f.policy_graph, export_dot(p.policy_graph()));
  if (!f.mi_report.empty()) {
    const auto report = p.mi_report();
    write_text(f.mi_report, to_csv(report));
  }
  if (!f.snapshot_out.empty()) p.save_snapshot(f.snapshot_out);
}

nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

struct SimulateFlags {
  std::string env_config;
  std::string agent = "reactive";
  std::string forecaster = "perfect";
  std::uint64_t seed = 0;
  bool refine = false;
  std::size_t warmup = 0;
  double epsilon = 0.3;
  std::optional<double> tau;
  std::string out;
  std::string trace_out;
  std::string policy_graph;
  std::string mi_report;
};

void run_simulate(const SimulateFlags& f) {
  const auto doc = load_json(f.env_config);
  SyntheticEnvConfig env;
  PipelineConfig cfg;
  try {
    if (!doc.is_object()) throw ValidationError("expected a JSON object");
    // Either a full pipeline config with an "env" section or a bare env section.
    const bool full = doc.contains("kpis");
    env = parse_env_config(full ? doc.value("env", nlohmann::json::object()) : doc.value("env", doc));
    cfg = full ? parse_config(doc) : harness_pipeline_config(env);
  } catch (const ValidationError& e) {
    throw ValidationError(f.env_config + ": " + e.what());
  }

  Pipeline p(cfg);
  if (f.tau) p.set_tau(f.tau);
  EpisodeOptions opt;
  opt.forecaster = f.forecaster == "persistence" ? Forecaster::Persistence : Forecaster::Perfect;
  opt.record = false;
  opt.epsilon = f.epsilon;
  for (std::size_t i = 0; i < f.warmup; ++i) {
    opt.seed = f.seed + 1 + i;
    run_episode(env, p, opt);
  }
  if (!f.tau && f.warmup > 0) p.set_tau(p.current_tau());

  opt.seed = f.seed;
  opt.epsilon = 0.0;
  opt.refine = f.refine;
  opt.record = true;
  const auto res = run_episode(env, p, opt);

  std::ofstream file;
  if (!f.out.empty()) file = open_out(f.out);
  std::ostream& out = f.out.empty() ? std::cout : file;
  for (const auto& e : res.explanations) out << p.to_json(e).dump() << '\n';
  if (!f.trace_out.empty()) {
    auto trace = open_out(f.trace_out);
    for (const auto& r : res.trace) trace << serialize(r) << '\n';
  }
  if (!f.policy_graph.empty()) write_text(f.policy_graph, export_dot(p.policy_graph()));
  if (!f.mi_report.empty()) {
    const auto report = p.mi_report();
    write_text(f.mi_report, to_csv(report));
  }
  std::fprintf(stderr, "steps=%zu cumulative_reward=%.6f overrides=%zu tau=%.6f\n", res.steps.size(),
               res.cumulative_reward, res.overrides, p.current_tau());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming symbolic explanations and forecast-aware refinement for control agents"};
  app.require_subcommand(1);

  PipelineFlags replay_flags;
  std::string trace_path;
  auto* replay = app.add_subcommand("replay", "Replay a JSONL trace");
  replay->add_option("--trace", trace_path, "Trace (JSONL)")->required();
  add_pipeline_flags(replay, replay_flags);

  PipelineFlags stream_flags;
  auto* stream = app.add_subcommand("stream", "Records on stdin, explanations on stdout");
  add_pipeline_flags(stream, stream_flags);

  std::size_t bench_kpis = 12;
  std::size_t bench_steps = 1000;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench", "Per-component latency");
  bench->add_option("--kpis", bench_kpis, "Number of KPIs")->required()->check(CLI::PositiveNumber);
  bench->add_option("--steps", bench_steps, "Number of decisions")->required()->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "RNG seed");

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Run the synthetic ABR harness");
  simulate->add_option("--env-config", sim.env_config, "Env or pipeline config (JSON)")->required();
  simulate->add_option("--agent", sim.agent, "Agent")->check(CLI::IsMember({"reactive"}));
  simulate->add_option("--forecaster", sim.forecaster, "Forecaster")
      ->check(CLI::IsMember({"persistence", "perfect"}));
  simulate->add_option("--seed", sim.seed, "Episode seed");
  simulate->add_flag("--refine", sim.refine, "Execute refined actions");
  simulate->add_option("--warmup", sim.warmup, "Exploratory warm-up episodes before the recorded one");
  simulate->add_option("--epsilon", sim.epsilon, "Warm-up exploration rate")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--tau", sim.tau, "Absolute refinement threshold");
  simulate->add_option("--out", sim.out, "Explanation stream (JSONL); stdout when omitted");
  simulate->add_option("--trace-out", sim.trace_out, "Write the episode trace (JSONL)");
  simulate->add_option("--policy-graph", sim.policy_graph, "Write the policy graph as DOT");
  simulate->add_option("--mi-report", sim.mi_report, "Write the MI report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*replay) {
      std::ifstream in(trace_path, std::ios::binary);
      if (!in) throw ValidationError("cannot open trace: " + trace_path);
      run_stream(replay_flags, in);
    } else if (*stream) {
      std::ios::sync_with_stdio(false);
      run_stream(stream_flags, std::cin);
    } else if (*bench) {
      std::cout << format_report(run_bench(bench_kpis, bench_steps, bench_seed));
    } else if (*simulate) {
      run_simulate(sim);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
