#include "foresight/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "foresight/error.hpp"
#include "foresight/pipeline.hpp"

namespace foresight {

namespace {

using Clock = std::chrono::steady_clock;

class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double stddev() const { return n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

PipelineConfig bench_config(std::size_t kpis, std::size_t actions) {
  PipelineConfig cfg;
  for (std::size_t k = 0; k < kpis; ++k) {
    KpiConfig c;
    c.name = "kpi" + std::to_string(k);
    if (k % 4 == 0) {
      c.has_forecast = true;
      c.horizon = 4;
      cfg.refiner.kpi_order.push_back(c.name);
    }
    cfg.kpis.push_back(std::move(c));
  }
  std::vector<double> values(actions);
  for (std::size_t i = 0; i < actions; ++i) values[i] = static_cast<double>(i);
  cfg.action_space = ActionSpace::ordered("action", values);
  cfg.refiner.enabled = true;
  return cfg;
}

}  // namespace

BenchReport run_bench(std::size_t kpis, std::size_t steps, std::uint64_t seed, std::size_t actions) {
  if (kpis == 0) throw ValidationError("bench needs at least one kpi");
  if (steps == 0) throw ValidationError("bench needs at least one step");
  if (actions == 0) throw ValidationError("bench needs at least one action");
  Pipeline pipeline(bench_config(kpis, actions));
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<double> level(kpis, 10.0);
  Accumulator sym, kg, is, refine, global, decision;
  const auto start = Clock::now();
  std::optional<double> reward;
  for (std::size_t n = 0; n < steps; ++n) {
    TraceRecord r;
    r.t = static_cast<std::int64_t>(n);
    r.reward = reward;
    for (std::size_t k = 0; k < kpis; ++k) {
      level[k] = std::max(0.1, level[k] + (uniform() - 0.5) * 2.0);
      const auto& c = pipeline.config().kpis[k];
      r.kpis[c.name] = level[k];
      if (c.has_forecast) {
        std::vector<double> f(c.horizon);
        double x = level[k];
        for (double& v : f) v = x = std::max(0.1, x + (uniform() - 0.5) * 2.0);
        r.forecasts[c.name] = std::move(f);
      }
    }
    const ActionId a{static_cast<std::uint32_t>(rng() % actions)};

    auto t0 = Clock::now();
    pipeline.symbolize(r);
    const double t_sym = ms_since(t0);
    t0 = Clock::now();
    pipeline.update_graphs(r);
    const double t_kg = ms_since(t0);
    t0 = Clock::now();
    const auto report = pipeline.explain(a);
    const double t_is = ms_since(t0);
    t0 = Clock::now();
    const auto d = pipeline.refine(a);
    const double t_ref = ms_since(t0);
    pipeline.commit(d.refined);
    t0 = Clock::now();
    const auto mi = pipeline.mi_report();
    const auto pg = pipeline.policy_graph();
    const double t_glob = ms_since(t0);
    if (report.per_kpi.size() != kpis || mi.empty() || pg.nodes.empty()) throw std::logic_error("bench: empty output");

    sym.add(t_sym);
    kg.add(t_kg);
    is.add(t_is);
    refine.add(t_ref);
    global.add(t_glob);
    decision.add(t_sym + t_kg + t_is + t_ref);
    reward = uniform() * 4.0 - 1.0;
  }

  BenchReport out;
  out.kpis = kpis;
  out.steps = steps;
  out.total_ms = ms_since(start);
  out.components = {{"Symbolizer", sym.mean(), sym.stddev()},
                    {"Knowledge Graph Update", kg.mean(), kg.stddev()},
                    {"Influence Score", is.mean(), is.stddev()},
                    {"Action Refinement", refine.mean(), refine.stddev()},
                    {"Global Explanation", global.mean(), global.stddev()}};
  out.decision = {"Decision (sym+kg+is+refine)", decision.mean(), decision.stddev()};
  return out;
}

std::string format_report(const BenchReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "kpis=%zu steps=%zu total_ms=%.3f\n", r.kpis, r.steps, r.total_ms);
  out += line;
  std::snprintf(line, sizeof line, "%-28s %14s %14s\n", "Component", "Mean Latency", "Std. Dev.");
  out += line;
  const auto row = [&](const ComponentLatency& c) {
    std::snprintf(line, sizeof line, "%-28s %11.4f ms %11.4f ms\n", c.component.c_str(), c.mean_ms, c.stddev_ms);
    out += line;
  };
  for (const auto& c : r.components) row(c);
  row(r.decision);
  return out;
}

}  // namespace foresight
