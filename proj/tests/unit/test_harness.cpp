#include <cmath>
#include <vector>

#include "doctest.h"
#include "foresight/error.hpp"
#include "foresight/harness.hpp"

using namespace foresight;

namespace {

EpisodeResult episode(std::uint64_t seed, Forecaster f = Forecaster::Perfect, bool refine = false) {
  const SyntheticEnvConfig env;
  Pipeline p(harness_pipeline_config(env));
  EpisodeOptions opt;
  opt.seed = seed;
  opt.forecaster = f;
  opt.refine = refine;
  return run_episode(env, p, opt);
}

}  // namespace

TEST_CASE("step with ample bandwidth and a full buffer") {
  SyntheticEnvConfig cfg;
  cfg.initial_buffer = 60.0;
  cfg.episode_chunks = 2;
  AbrEnv env(cfg, {100000, 100000});
  const auto a = env.step(1200);
  CHECK(a.rebuffer == 0.0);
  CHECK(a.smoothness == 0.0);
  CHECK(a.reward == doctest::Approx(1.2));
  const auto b = env.step(750);
  CHECK(b.reward == doctest::Approx(0.75 - 0.45));
  CHECK(env.done());
  CHECK_THROWS_AS(env.step(750), ValidationError);
}

TEST_CASE("a collapsed bandwidth segment forces a stall") {
  SyntheticEnvConfig cfg;
  cfg.initial_buffer = 2.0;
  cfg.episode_chunks = 1;
  AbrEnv env(cfg, {0.0});
  const auto o = env.step(300);
  // Bandwidth is clamped to the floor (50 kbps): 300 * 4 / 50 = 24 s download.
  CHECK(o.download == doctest::Approx(24.0));
  CHECK(o.rebuffer == doctest::Approx(22.0));
  CHECK(o.reward == doctest::Approx(0.3 - 4.3 * 22.0));
  CHECK(env.state().buffer == doctest::Approx(4.0));
}

TEST_CASE("off-ladder bitrate is rejected") {
  SyntheticEnvConfig cfg;
  cfg.episode_chunks = 1;
  AbrEnv env(cfg, {1000});
  CHECK_THROWS_AS(env.step(1000), ValidationError);
}

TEST_CASE("reactive agent") {
  SyntheticEnvConfig cfg;
  cfg.bitrate_ladder = {300, 750, 1200, 1850, 2850};
  EnvState s;
  s.buffer = 20.0;
  s.throughput_kbps = 2000.0;
  CHECK(reactive_bitrate(s, cfg) == 1850);
  s.throughput_kbps = 100.0;
  CHECK(reactive_bitrate(s, cfg) == 300);
  s.throughput_kbps = 9000.0;
  CHECK(reactive_bitrate(s, cfg) == 2850);
  s.buffer = 1.0;
  CHECK(reactive_bitrate(s, cfg) == 300);
}

TEST_CASE("forecasters") {
  const std::vector<double> hist{1.0, 5.0};
  CHECK(persistence_forecast(hist, 4) == std::vector<double>{5.0, 5.0, 5.0, 5.0});
  CHECK_THROWS_AS(persistence_forecast(std::vector<double>{}, 4), ValidationError);
  const std::vector<double> bw{1000, 1000, 400, 400, 2400};
  CHECK(perfect_forecast(bw, 1, 3) == std::vector<double>{1000, 400, 400});
  CHECK(perfect_forecast(bw, 4, 3) == std::vector<double>{2400, 2400, 2400});
  CHECK_THROWS_AS(perfect_forecast(bw, 0, 0), ValidationError);
}

TEST_CASE("persistence error grows with the horizon") {
  SyntheticEnvConfig cfg;
  const auto bw = bandwidth_trace(cfg, 5000, 3);
  double prev = -1.0;
  for (std::size_t h = 1; h <= 6; ++h) {
    double err = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t + h < bw.size(); ++t) {
      const auto f = persistence_forecast(std::span(bw).subspan(0, t + 1), h);
      err += std::abs(f[h - 1] - bw[t + h]) / bw[t + h];
      ++n;
    }
    const double mape = err / static_cast<double>(n);
    CHECK(mape > prev);
    prev = mape;
  }
}

TEST_CASE("bandwidth trace seeding and explicit segments") {
  SyntheticEnvConfig cfg;
  CHECK(bandwidth_trace(cfg, 100, 1) == bandwidth_trace(cfg, 100, 1));
  CHECK(bandwidth_trace(cfg, 100, 1) != bandwidth_trace(cfg, 100, 2));
  for (double v : bandwidth_trace(cfg, 1000, 9)) CHECK(v >= cfg.floor);
  cfg.segments = {{1000, 2}, {0, 1}};
  CHECK(bandwidth_trace(cfg, 5, 1) == std::vector<double>{1000, 1000, 50, 50, 50});
}

TEST_CASE("reward decomposition matches an independent recomputation") {
  const SyntheticEnvConfig env;
  for (std::uint64_t seed : {1u, 2u, 3u, 17u}) {
    const auto r = episode(seed);
    REQUIRE(r.bitrates.size() == env.episode_chunks);
    double quality = 0, stall = 0, smooth = 0, buffer = env.initial_buffer;
    for (std::size_t n = 0; n < r.bitrates.size(); ++n) {
      const double download = r.bitrates[n] * env.chunk_seconds / std::max(r.bandwidth[n], env.floor);
      const double t = std::max(0.0, download - buffer);
      buffer = std::min(env.buffer_cap, std::max(0.0, buffer - download) + env.chunk_seconds);
      quality += r.bitrates[n] / 1000.0;
      stall += t;
      if (n > 0) smooth += std::abs(r.bitrates[n] - r.bitrates[n - 1]) / 1000.0;
    }
    CHECK(r.cumulative_reward == doctest::Approx(quality - env.mu * stall - smooth).epsilon(1e-12));
  }
}

TEST_CASE("buffer stays within [0, cap]") {
  SyntheticEnvConfig cfg;
  cfg.episode_chunks = 500;
  const auto bw = bandwidth_trace(cfg, 500, 5);
  AbrEnv env(cfg, bw);
  std::size_t remaining = env.state().chunks_remaining;
  for (std::size_t i = 0; i < 500; ++i) {
    env.step(cfg.bitrate_ladder[(i * 7) % cfg.bitrate_ladder.size()]);
    REQUIRE(env.state().buffer >= 0.0);
    REQUIRE(env.state().buffer <= cfg.buffer_cap);
    REQUIRE(env.state().chunks_remaining < remaining);
    remaining = env.state().chunks_remaining;
  }
}

TEST_CASE("episodes are deterministic in the seed") {
  const auto a = episode(11, Forecaster::Persistence);
  const auto b = episode(11, Forecaster::Persistence);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(serialize(a.trace[i]) == serialize(b.trace[i]));
  CHECK(a.cumulative_reward == b.cumulative_reward);
  CHECK(episode(12).bandwidth != a.bandwidth);
}

TEST_CASE("trace layout") {
  const SyntheticEnvConfig env;
  const auto r = episode(4);
  REQUIRE(r.trace.size() == env.episode_chunks + 1);
  CHECK_FALSE(r.trace.front().reward.has_value());
  CHECK(r.trace.back().done);
  CHECK_FALSE(r.trace.back().action.has_value());
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].t == r.trace[i - 1].t + 1);
    CHECK(*r.trace[i].reward == doctest::Approx(r.steps[i - 1].reward));
  }
  // Perfect forecasts carry the true upcoming bandwidth.
  CHECK(r.trace[3].forecasts.at("tput")[0] == doctest::Approx(r.bandwidth[3] / 1000.0));
}

TEST_CASE("zero-length episode") {
  SyntheticEnvConfig env;
  env.episode_chunks = 0;
  Pipeline p(harness_pipeline_config(SyntheticEnvConfig{}));
  const auto r = run_episode(env, p, EpisodeOptions{});
  CHECK(r.trace.empty());
  CHECK(r.cumulative_reward == 0.0);
}

TEST_CASE("env config parsing") {
  const auto cfg = parse_env_config(nlohmann::json::parse(
      R"({"mu": 2.0, "episode_chunks": 10, "bandwidth": {"levels": [500, 900], "segments": [{"level": 700, "chunks": 3}]}})"));
  CHECK(cfg.mu == 2.0);
  CHECK(cfg.episode_chunks == 10);
  CHECK(cfg.levels == std::vector<double>{500, 900});
  REQUIRE(cfg.segments.size() == 1);
  CHECK(parse_env_config(to_json(cfg)).segments == cfg.segments);
  CHECK_THROWS_AS(parse_env_config(nlohmann::json::parse(R"({"bitrate_ladder": [300, 200]})")), ValidationError);
  CHECK_THROWS_AS(parse_env_config(nlohmann::json::parse(R"({"mu": -1})")), ValidationError);
  CHECK_THROWS_AS(parse_env_config(nlohmann::json::parse(R"({"mu": "x"})")), ValidationError);
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{2, 3, 4, 5}, b{1, 1, 1, 1};
  const auto t = paired_t_test(a, b);
  CHECK(t.mean_difference == 2.5);
  // sd of {1,2,3,4} = 1.2910; t = 2.5 / (1.2910 / 2).
  CHECK(t.t_statistic == doctest::Approx(3.8730).epsilon(1e-4));
  CHECK(t.p_value < 0.05);
  CHECK(paired_t_test(b, a).p_value > 0.95);
  CHECK(paired_t_test(b, b).p_value == 0.5);
  CHECK_THROWS_AS(paired_t_test(a, std::vector<double>{1}), ValidationError);
}

TEST_CASE("refinement with tau = +inf is the identity") {
  RefinementExperimentConfig cfg;
  cfg.warmup_episodes = 5;
  cfg.evaluation_episodes = 5;
  const SyntheticEnvConfig env;
  const auto r = run_refinement_experiment(env, harness_pipeline_config(env), cfg);
  CHECK(r.identity == r.unrefined);
  CHECK(r.decisions == 5 * env.episode_chunks);
}
