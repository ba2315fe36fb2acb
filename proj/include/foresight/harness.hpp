#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "foresight/config.hpp"
#include "foresight/pipeline.hpp"
#include "foresight/trace.hpp"
#include "json.hpp"

namespace foresight {

// ABR-like environment. Bitrates are in kbps, times in seconds.
struct SyntheticEnvConfig {
  std::vector<double> bitrate_ladder{300, 750, 1200, 1850, 2850, 4300};
  double chunk_seconds = 4.0;
  double buffer_cap = 60.0;
  double initial_buffer = 0.0;
  double mu = 4.3;
  std::size_t episode_chunks = 48;

  // Bandwidth: segments of random length at a level drawn from `levels`,
  // replaced by `drop_level` with probability drop_probability.
  std::vector<double> levels{1000, 1600, 2400, 3200, 4800};
  std::size_t min_segment = 2;
  std::size_t max_segment = 6;
  double drop_probability = 0.25;
  double drop_level = 400;
  double floor = 50;
  // Explicit (level, chunks) segments; when non-empty the random process is
  // not used. The last segment repeats if the episode is longer.
  std::vector<std::pair<double, std::size_t>> segments;

  // Agent and forecaster.
  double safety_buffer = 4.0;
  std::size_t horizon = 4;

  void validate() const;
};

SyntheticEnvConfig parse_env_config(const nlohmann::json& doc);
nlohmann::json to_json(const SyntheticEnvConfig& cfg);

// Per-chunk bandwidth in kbps, `chunks` long, deterministic in seed.
std::vector<double> bandwidth_trace(const SyntheticEnvConfig& cfg, std::size_t chunks, std::uint64_t seed);

struct EnvState {
  double buffer = 0.0;
  std::optional<double> last_bitrate;
  std::size_t chunks_remaining = 0;
  std::size_t chunk = 0;
  // Last download, zero before the first chunk.
  double throughput_kbps = 0.0;
  double delay = 0.0;
};

struct StepOutcome {
  double reward = 0.0;
  double rebuffer = 0.0;
  double download = 0.0;
  // Reward terms in Mbps.
  double quality = 0.0;
  double smoothness = 0.0;
};

class AbrEnv {
 public:
  AbrEnv(SyntheticEnvConfig cfg, std::vector<double> bandwidth);

  // Throws ValidationError if bitrate is not on the ladder or the episode is over.
  StepOutcome step(double bitrate);

  const EnvState& state() const noexcept { return state_; }
  bool done() const noexcept { return state_.chunks_remaining == 0; }
  const std::vector<double>& bandwidth() const noexcept { return bandwidth_; }
  const SyntheticEnvConfig& config() const noexcept { return cfg_; }

 private:
  SyntheticEnvConfig cfg_;
  std::vector<double> bandwidth_;
  EnvState state_;
};

// Highest rung at or below the measured throughput; the lowest rung when the
// buffer is under the safety level or throughput is below every rung.
double reactive_bitrate(const EnvState& s, const SyntheticEnvConfig& cfg);

std::vector<double> persistence_forecast(std::span<const double> history, std::size_t h);
// Bandwidth of chunks [from, from + h), the last level repeated past the end.
std::vector<double> perfect_forecast(std::span<const double> bandwidth, std::size_t from, std::size_t h);

enum class Forecaster { Persistence, Perfect };

// tput, delay, buffer, last_bitrate, chunks_left over the bitrate ladder;
// refinement keyed on tput.
PipelineConfig harness_pipeline_config(const SyntheticEnvConfig& env);

struct EpisodeOptions {
  Forecaster forecaster = Forecaster::Perfect;
  std::uint64_t seed = 0;
  // Refined action is executed when true.
  bool refine = false;
  // Uniform random rung with this probability (warm-up exploration).
  double epsilon = 0.0;
  bool record = true;
};

struct EpisodeResult {
  std::vector<TraceRecord> trace;
  std::vector<ExplanationRecord> explanations;
  std::vector<StepOutcome> steps;
  std::vector<double> bitrates;
  std::vector<double> bandwidth;
  double cumulative_reward = 0.0;
  std::size_t overrides = 0;
};

// Drives env, agent and pipeline for one episode; timesteps continue from
// the pipeline's last one. Ends with a terminal record.
EpisodeResult run_episode(const SyntheticEnvConfig& env, Pipeline& pipeline, const EpisodeOptions& opt);

struct PairedTest {
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  // One-sided, H1: mean(a - b) > 0.
  double p_value = 1.0;
};

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct RefinementExperimentConfig {
  std::size_t warmup_episodes = 20;
  std::size_t evaluation_episodes = 50;
  Forecaster forecaster = Forecaster::Perfect;
  std::uint64_t seed = 1;
  double warmup_epsilon = 0.3;
};

struct RefinementExperimentResult {
  std::vector<double> unrefined;
  std::vector<double> refined;
  // Refinement on with tau = +inf.
  std::vector<double> identity;
  PairedTest test;
  double tau = 0.0;
  std::size_t overrides = 0;
  std::size_t decisions = 0;
};

// Warm up one pipeline, freeze tau, then run paired evaluation episodes from
// copies of the warmed pipeline.
RefinementExperimentResult run_refinement_experiment(const SyntheticEnvConfig& env,
                                                     const PipelineConfig& pipeline_cfg,
                                                     const RefinementExperimentConfig& cfg);

}  // namespace foresight
