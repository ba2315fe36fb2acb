#include "foresight/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "foresight/error.hpp"

namespace foresight {

using nlohmann::json;

void SyntheticEnvConfig::validate() const {
  if (bitrate_ladder.empty()) throw ValidationError("env: bitrate_ladder must not be empty");
  for (std::size_t i = 0; i < bitrate_ladder.size(); ++i) {
    require_finite(bitrate_ladder[i], "env.bitrate_ladder");
    if (bitrate_ladder[i] <= 0) throw ValidationError("env: bitrates must be positive");
    if (i > 0 && bitrate_ladder[i] <= bitrate_ladder[i - 1])
      throw ValidationError("env: bitrate_ladder must be strictly increasing");
  }
  if (!(chunk_seconds > 0)) throw ValidationError("env: chunk_seconds must be > 0");
  if (!(buffer_cap > 0)) throw ValidationError("env: buffer_cap must be > 0");
  if (!(initial_buffer >= 0 && initial_buffer <= buffer_cap))
    throw ValidationError("env: initial_buffer must lie in [0, buffer_cap]");
  if (!(mu >= 0)) throw ValidationError("env: mu must be >= 0");
  if (levels.empty() && segments.empty()) throw ValidationError("env: bandwidth levels must not be empty");
  for (double l : levels)
    if (!(l >= 0)) throw ValidationError("env: bandwidth levels must be >= 0");
  if (min_segment == 0 || max_segment < min_segment)
    throw ValidationError("env: segment durations must satisfy 0 < min_segment <= max_segment");
  if (!(drop_probability >= 0 && drop_probability <= 1))
    throw ValidationError("env: drop_probability must lie in [0, 1]");
  if (!(drop_level >= 0)) throw ValidationError("env: drop_level must be >= 0");
  if (!(floor > 0)) throw ValidationError("env: floor must be > 0");
  for (const auto& [level, chunks] : segments)
    if (!(level >= 0) || chunks == 0) throw ValidationError("env: segments need level >= 0 and chunks > 0");
  if (!(safety_buffer >= 0)) throw ValidationError("env: safety_buffer must be >= 0");
  if (horizon == 0) throw ValidationError("env: horizon must be >= 1");
}

SyntheticEnvConfig parse_env_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("env: expected an object");
  SyntheticEnvConfig c;
  try {
    c.bitrate_ladder = doc.value("bitrate_ladder", c.bitrate_ladder);
    c.chunk_seconds = doc.value("chunk_seconds", c.chunk_seconds);
    c.buffer_cap = doc.value("buffer_cap", c.buffer_cap);
    c.initial_buffer = doc.value("initial_buffer", c.initial_buffer);
    c.mu = doc.value("mu", c.mu);
    c.episode_chunks = doc.value("episode_chunks", c.episode_chunks);
    c.safety_buffer = doc.value("safety_buffer", c.safety_buffer);
    c.horizon = doc.value("horizon", c.horizon);
    if (auto bw = doc.find("bandwidth"); bw != doc.end()) {
      c.levels = bw->value("levels", c.levels);
      c.min_segment = bw->value("min_segment", c.min_segment);
      c.max_segment = bw->value("max_segment", c.max_segment);
      c.drop_probability = bw->value("drop_probability", c.drop_probability);
      c.drop_level = bw->value("drop_level", c.drop_level);
      c.floor = bw->value("floor", c.floor);
      if (auto seg = bw->find("segments"); seg != bw->end()) {
        for (const auto& s : *seg) c.segments.emplace_back(s.at("level").get<double>(), s.at("chunks").get<std::size_t>());
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("env: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const SyntheticEnvConfig& c) {
  json segments = json::array();
  for (const auto& [level, chunks] : c.segments) segments.push_back(json{{"level", level}, {"chunks", chunks}});
  return json{{"bitrate_ladder", c.bitrate_ladder},
              {"chunk_seconds", c.chunk_seconds},
              {"buffer_cap", c.buffer_cap},
              {"initial_buffer", c.initial_buffer},
              {"mu", c.mu},
              {"episode_chunks", c.episode_chunks},
              {"safety_buffer", c.safety_buffer},
              {"horizon", c.horizon},
              {"bandwidth",
               {{"levels", c.levels},
                {"min_segment", c.min_segment},
                {"max_segment", c.max_segment},
                {"drop_probability", c.drop_probability},
                {"drop_level", c.drop_level},
                {"floor", c.floor},
                {"segments", segments}}}};
}

std::vector<double> bandwidth_trace(const SyntheticEnvConfig& cfg, std::size_t chunks, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(chunks);
  if (!cfg.segments.empty()) {
    for (const auto& [level, n] : cfg.segments)
      for (std::size_t i = 0; i < n && out.size() < chunks; ++i) out.push_back(std::max(level, cfg.floor));
    while (out.size() < chunks) out.push_back(std::max(cfg.segments.back().first, cfg.floor));
    return out;
  }
  // Draw raw integers and map them by hand: the standard distributions are
  // not specified bit-for-bit across library implementations.
  std::mt19937_64 rng(seed);
  const auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const auto pick = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  while (out.size() < chunks) {
    const std::size_t len = cfg.min_segment + pick(cfg.max_segment - cfg.min_segment + 1);
    double level = cfg.levels[pick(cfg.levels.size())];
    if (uniform01() < cfg.drop_probability) level = cfg.drop_level;
    level = std::max(level, cfg.floor);
    for (std::size_t i = 0; i < len && out.size() < chunks; ++i) out.push_back(level);
  }
  return out;
}

AbrEnv::AbrEnv(SyntheticEnvConfig cfg, std::vector<double> bandwidth)
    : cfg_(std::move(cfg)), bandwidth_(std::move(bandwidth)) {
  cfg_.validate();
  if (bandwidth_.size() < cfg_.episode_chunks) throw ValidationError("env: bandwidth trace shorter than the episode");
  state_.buffer = cfg_.initial_buffer;
  state_.chunks_remaining = cfg_.episode_chunks;
}

StepOutcome AbrEnv::step(double bitrate) {
  if (done()) throw ValidationError("env: episode is over");
  if (std::find(cfg_.bitrate_ladder.begin(), cfg_.bitrate_ladder.end(), bitrate) == cfg_.bitrate_ladder.end())
    throw ValidationError("env: bitrate " + format_number(bitrate) + " is not on the ladder");
  const double bw = std::max(bandwidth_[state_.chunk], cfg_.floor);
  StepOutcome o;
  o.download = bitrate * cfg_.chunk_seconds / bw;
  o.rebuffer = std::max(0.0, o.download - state_.buffer);
  state_.buffer = std::min(cfg_.buffer_cap, std::max(0.0, state_.buffer - o.download) + cfg_.chunk_seconds);
  o.quality = bitrate / 1000.0;
  o.smoothness = state_.last_bitrate ? std::abs(o.quality - *state_.last_bitrate / 1000.0) : 0.0;
  o.reward = o.quality - cfg_.mu * o.rebuffer - o.smoothness;
  state_.last_bitrate = bitrate;
  state_.throughput_kbps = bw;
  state_.delay = o.download;
  --state_.chunks_remaining;
  ++state_.chunk;
  return o;
}

double reactive_bitrate(const EnvState& s, const SyntheticEnvConfig& cfg) {
  const auto& ladder = cfg.bitrate_ladder;
  if (s.buffer < cfg.safety_buffer) return ladder.front();
  auto it = std::upper_bound(ladder.begin(), ladder.end(), s.throughput_kbps);
  if (it == ladder.begin()) return ladder.front();
  return *std::prev(it);
}

std::vector<double> persistence_forecast(std::span<const double> history, std::size_t h) {
  if (history.empty()) throw ValidationError("persistence forecast needs at least one observation");
  if (h == 0) throw ValidationError("forecast horizon must be >= 1");
  return std::vector<double>(h, history.back());
}

std::vector<double> perfect_forecast(std::span<const double> bandwidth, std::size_t from, std::size_t h) {
  if (h == 0) throw ValidationError("forecast horizon must be >= 1");
  if (bandwidth.empty()) throw ValidationError("perfect forecast needs a bandwidth trace");
  std::vector<double> out(h);
  for (std::size_t i = 0; i < h; ++i) out[i] = bandwidth[std::min(from + i, bandwidth.size() - 1)];
  return out;
}

PipelineConfig harness_pipeline_config(const SyntheticEnvConfig& env) {
  env.validate();
  PipelineConfig cfg;
  KpiConfig tput;
  tput.name = "tput";
  tput.has_forecast = true;
  tput.horizon = env.horizon;
  tput.mi_offsets = {-2, -1, 0};
  for (std::size_t o = 1; o <= std::min<std::size_t>(env.horizon, 2); ++o) tput.mi_offsets.push_back(static_cast<int>(o));
  cfg.kpis.push_back(tput);
  for (const char* name : {"delay", "buffer", "last_bitrate", "chunks_left"}) {
    KpiConfig k;
    k.name = name;
    cfg.kpis.push_back(k);
  }
  cfg.action_space = ActionSpace::ordered("bitrate", env.bitrate_ladder);
  cfg.refiner.kpi_order = {"tput"};
  cfg.refiner.enabled = false;
  cfg.validate();
  return cfg;
}

namespace {

TraceRecord observation(const AbrEnv& env, const SyntheticEnvConfig& cfg, Forecaster forecaster,
                        std::span<const double> seen_tput) {
  const auto& s = env.state();
  TraceRecord r;
  const double tput = s.throughput_kbps / 1000.0;
  r.kpis["tput"] = tput;
  r.kpis["delay"] = s.delay;
  r.kpis["buffer"] = s.buffer;
  r.kpis["last_bitrate"] = s.last_bitrate.value_or(0.0) / 1000.0;
  r.kpis["chunks_left"] = static_cast<double>(s.chunks_remaining);
  std::vector<double> fc;
  if (forecaster == Forecaster::Perfect) {
    fc = perfect_forecast(env.bandwidth(), s.chunk, cfg.horizon);
    for (double& v : fc) v /= 1000.0;
  } else if (seen_tput.empty()) {
    fc.assign(cfg.horizon, tput);
  } else {
    fc = persistence_forecast(seen_tput, cfg.horizon);
  }
  r.forecasts["tput"] = std::move(fc);
  return r;
}

}  // namespace

EpisodeResult run_episode(const SyntheticEnvConfig& cfg, Pipeline& pipeline, const EpisodeOptions& opt) {
  EpisodeResult res;
  if (cfg.episode_chunks == 0) return res;
  const auto bandwidth = bandwidth_trace(cfg, cfg.episode_chunks + cfg.horizon, opt.seed);
  AbrEnv env(cfg, bandwidth);
  std::mt19937_64 agent_rng(opt.seed ^ 0x5bd1e995u);
  std::vector<double> seen;
  std::optional<double> pending_reward;
  const auto next_t = [&pipeline] { return pipeline.last_t() ? *pipeline.last_t() + 1 : 0; };
  const ActionSpace& space = pipeline.action_space();

  pipeline.set_refine(opt.refine);
  while (!env.done()) {
    TraceRecord r = observation(env, cfg, opt.forecaster, seen);
    r.t = next_t();
    r.reward = pending_reward;
    double proposed = reactive_bitrate(env.state(), cfg);
    if (opt.epsilon > 0 && static_cast<double>(agent_rng() >> 11) * 0x1.0p-53 < opt.epsilon)
      proposed = cfg.bitrate_ladder[agent_rng() % cfg.bitrate_ladder.size()];
    r.action = proposed;
    auto e = pipeline.process(r, opt.refine);
    double executed = proposed;
    if (e.refinement && e.refinement->overridden) {
      executed = space.numeric(e.refinement->refined);
      r.action = executed;
      ++res.overrides;
    }
    const auto step = env.step(executed);
    seen.push_back(env.state().throughput_kbps / 1000.0);
    pending_reward = step.reward;
    res.cumulative_reward += step.reward;
    res.steps.push_back(step);
    res.bitrates.push_back(executed);
    if (opt.record) {
      res.trace.push_back(std::move(r));
      res.explanations.push_back(std::move(e));
    }
  }
  TraceRecord last = observation(env, cfg, opt.forecaster, seen);
  last.t = next_t();
  last.reward = pending_reward;
  last.done = true;
  auto e = pipeline.process(last);
  if (opt.record) {
    res.trace.push_back(std::move(last));
    res.explanations.push_back(std::move(e));
  }
  res.bandwidth.assign(bandwidth.begin(), bandwidth.begin() + static_cast<std::ptrdiff_t>(cfg.episode_chunks));
  return res;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired test needs equally sized samples");
  if (a.size() < 2) throw ValidationError("paired test needs at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  PairedTest out;
  out.mean_difference = mean;
  if (sd == 0.0) {
    out.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity()
                               : (mean < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    out.p_value = mean > 0 ? 0.0 : (mean < 0 ? 1.0 : 0.5);
    return out;
  }
  out.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t_statistic));
  return out;
}

RefinementExperimentResult run_refinement_experiment(const SyntheticEnvConfig& env,
                                                     const PipelineConfig& pipeline_cfg,
                                                     const RefinementExperimentConfig& cfg) {
  Pipeline warm(pipeline_cfg);
  EpisodeOptions opt;
  opt.forecaster = cfg.forecaster;
  opt.record = false;
  opt.epsilon = cfg.warmup_epsilon;
  for (std::size_t i = 0; i < cfg.warmup_episodes; ++i) {
    opt.seed = cfg.seed + i;
    run_episode(env, warm, opt);
  }
  RefinementExperimentResult res;
  res.tau = warm.current_tau();
  warm.set_tau(res.tau);

  opt.epsilon = 0.0;
  for (std::size_t j = 0; j < cfg.evaluation_episodes; ++j) {
    opt.seed = cfg.seed + 100000 + j;
    Pipeline base = warm;
    opt.refine = false;
    res.unrefined.push_back(run_episode(env, base, opt).cumulative_reward);

    Pipeline refined = warm;
    opt.refine = true;
    const auto r = run_episode(env, refined, opt);
    res.refined.push_back(r.cumulative_reward);
    res.overrides += r.overrides;
    res.decisions += r.steps.size();

    Pipeline identity = warm;
    identity.set_tau(std::numeric_limits<double>::infinity());
    res.identity.push_back(run_episode(env, identity, opt).cumulative_reward);
  }
  res.test = paired_t_test(res.refined, res.unrefined);
  return res;
}

}  // namespace foresight
