#include <algorithm>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "foresight/error.hpp"
#include "foresight/knowledge_graph.hpp"
#include "foresight/symbolizer.hpp"

using namespace foresight;

namespace {

SymbolicState st(Predicate p, int c, std::optional<int> t = std::nullopt) {
  SymbolicState s;
  s.predicate = p;
  s.category = static_cast<std::uint8_t>(c);
  if (t) s.trend = static_cast<std::uint8_t>(*t);
  return s;
}

const SymbolicState kS = st(Predicate::Inc, 3, 0);
const SymbolicState kS1 = st(Predicate::Const, 2, 1);
const SymbolicState kS2 = st(Predicate::Dec, 0, 0);
const ActionId kA1{0};
const ActionId kA2{1};
const ActionId kA3{2};

struct Update {
  SymbolicState from;
  ActionId action;
  SymbolicState to;
  double reward;
};

std::vector<Update> random_updates(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> pred(0, 2), cat(0, 4), trend(0, 2), act(0, 3);
  std::uniform_real_distribution<double> rew(-2.0, 2.0);
  std::vector<Update> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({st(static_cast<Predicate>(pred(rng)), cat(rng), trend(rng)),
                   ActionId{static_cast<std::uint32_t>(act(rng))},
                   st(static_cast<Predicate>(pred(rng)), cat(rng), trend(rng)), rew(rng)});
  }
  return out;
}

}  // namespace

TEST_CASE("action distribution from counts") {
  KnowledgeGraph g("tput");
  for (int i = 0; i < 3; ++i) g.update(kS, kA1, kS1, 1.0);
  g.update(kS, kA2, kS2, 0.0);
  const auto d = g.action_distribution(kS);
  REQUIRE(d.size() == 2);
  CHECK(d[0].first == kA1);
  CHECK(d[0].second == 0.75);
  CHECK(d[1].second == 0.25);

  KnowledgeGraph single("x");
  single.update(kS, kA3, kS1, 0.0);
  const auto one = single.action_distribution(kS);
  REQUIRE(one.size() == 1);
  CHECK(one[0].second == 1.0);
  CHECK(single.action_distribution(kS2).empty());
}

TEST_CASE("mean reward is count-weighted over destinations") {
  KnowledgeGraph g("tput");
  g.update(kS, kA1, kS1, 0.5);
  for (int i = 0; i < 3; ++i) g.update(kS, kA1, kS2, 1.0);
  CHECK(*g.mean_reward(kS, kA1) == doctest::Approx(0.875));
  CHECK_FALSE(g.mean_reward(kS, kA2).has_value());
  KnowledgeGraph one("x");
  one.update(kS, kA2, kS1, -0.25);
  CHECK(*one.mean_reward(kS, kA2) == -0.25);
}

TEST_CASE("best action for a transition") {
  KnowledgeGraph g("tput");
  const auto space = ActionSpace::ordered("a", {1, 2, 3});
  g.update(kS, kA1, kS1, 0.8);
  g.update(kS, kA2, kS1, 0.73);
  g.update(kS, kA3, kS2, 5.0);
  const auto best = g.best_action_for_transition(kS, kS1, space);
  REQUIRE(best.has_value());
  CHECK(best->first == kA1);
  CHECK(best->second == doctest::Approx(0.8));
  CHECK_FALSE(g.best_action_for_transition(kS1, kS, space).has_value());
  CHECK(g.has_transition(kS, kS2));
  CHECK_FALSE(g.has_transition(kS2, kS));

  // Exact tie: first in the space's order.
  KnowledgeGraph tie("x");
  tie.update(kS, kA3, kS1, 1.0);
  tie.update(kS, kA2, kS1, 1.0);
  CHECK(tie.best_action_for_transition(kS, kS1, space)->first == kA2);
}

TEST_CASE("best action matches an exhaustive scan with stable ordering") {
  std::mt19937_64 rng(41);
  const auto space = ActionSpace::ordered("a", {1, 2, 3, 4});
  auto ups = random_updates(rng, 3000);
  // Coarse rewards to force ties.
  for (auto& u : ups) u.reward = std::round(u.reward);
  KnowledgeGraph g("x");
  for (const auto& u : ups) g.update(u.from, u.action, u.to, u.reward);
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, std::pair<double, int>> table;
  for (const auto& u : ups) {
    auto& cell = table[{u.from.key(), u.to.key(), u.action.value}];
    cell.first += u.reward;
    cell.second += 1;
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<std::uint32_t, double>> oracle;
  for (const auto& [k, v] : table) {
    const auto [s, t, a] = k;
    const double mean = v.first / v.second;
    auto it = oracle.find({s, t});
    if (it == oracle.end() || mean > it->second.second) oracle[{s, t}] = {a, mean};
  }
  for (const auto& [k, v] : oracle) {
    const auto got = g.best_action_for_transition(SymbolicState::from_key(k.first), SymbolicState::from_key(k.second), space);
    REQUIRE(got.has_value());
    REQUIRE(got->first.value == v.first);
    REQUIRE(got->second == doctest::Approx(v.second).epsilon(1e-12));
  }
}

TEST_CASE("terminal visits are counted on the node only") {
  KnowledgeGraph g("x");
  g.update(kS, kA1, kS1, 1.0);
  g.record_terminal(kS1);
  CHECK(g.node(kS)->visits == 1);
  CHECK(g.node(kS1)->visits == 1);
  CHECK(g.node(kS1)->terminal == 1);
  CHECK(g.edge_count() == 1);
  CHECK(g.action_distribution(kS1).empty());
}

TEST_CASE("non-finite rewards are rejected") {
  KnowledgeGraph g("x");
  CHECK_THROWS_AS(g.update(kS, kA1, kS1, NAN), ValidationError);
}

TEST_CASE("property: distributions sum to one") {
  std::mt19937_64 rng(7);
  KnowledgeGraph g("x");
  for (const auto& u : random_updates(rng, 5000)) g.update(u.from, u.action, u.to, u.reward);
  for (const auto& [s, stats] : g.nodes()) {
    const auto d = g.action_distribution(s);
    if (d.empty()) continue;
    double sum = 0.0;
    for (const auto& [a, p] : d) sum += p;
    REQUIRE(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("property: update order does not change counts and distributions") {
  std::mt19937_64 rng(13);
  auto ups = random_updates(rng, 2000);
  // Dyadic rewards keep sums exact under any order.
  for (auto& u : ups) u.reward = std::round(u.reward * 8.0) / 8.0;
  KnowledgeGraph a("x");
  for (const auto& u : ups) a.update(u.from, u.action, u.to, u.reward);
  std::shuffle(ups.begin(), ups.end(), rng);
  KnowledgeGraph b("x");
  for (const auto& u : ups) b.update(u.from, u.action, u.to, u.reward);
  CHECK(a == b);
  for (const auto& [s, stats] : a.nodes()) {
    REQUIRE(a.action_distribution(s) == b.action_distribution(s));
    for (std::uint32_t act = 0; act < 4; ++act)
      REQUIRE(a.mean_reward(s, ActionId{act}) == b.mean_reward(s, ActionId{act}));
  }
}

TEST_CASE("snapshot round-trip restores every statistic") {
  std::mt19937_64 rng(19);
  const auto space = ActionSpace::ordered("a", {1, 2, 3, 4});
  KnowledgeGraph g("tput");
  for (const auto& u : random_updates(rng, 4000)) g.update(u.from, u.action, u.to, u.reward);
  g.record_terminal(kS);
  CHECK(g.node_count() == 45);
  const auto r = KnowledgeGraph::restore(g.kpi(), g.nodes(), g.edges());
  CHECK(r == g);
  for (const auto& [s, stats] : g.nodes()) {
    REQUIRE(r.action_distribution(s) == g.action_distribution(s));
    for (std::uint32_t act = 0; act < 4; ++act) REQUIRE(r.mean_reward(s, ActionId{act}) == g.mean_reward(s, ActionId{act}));
    for (const auto& [t, unused] : g.nodes())
      REQUIRE(r.best_action_for_transition(s, t, space) == g.best_action_for_transition(s, t, space));
  }
  const KnowledgeGraph empty("e");
  CHECK(KnowledgeGraph::restore("e", empty.nodes(), empty.edges()) == empty);
}

TEST_CASE("inconsistent snapshots are rejected") {
  KnowledgeGraph g("x");
  g.update(kS, kA1, kS1, 1.0);
  auto nodes = g.nodes();
  auto edges = g.edges();
  auto bad_nodes = nodes;
  bad_nodes[0].second.visits += 1;
  CHECK_THROWS_AS(KnowledgeGraph::restore("x", bad_nodes, edges), ValidationError);
  auto dup = edges;
  dup.push_back(edges[0]);
  CHECK_THROWS_AS(KnowledgeGraph::restore("x", nodes, dup), ValidationError);
  auto dangling = edges;
  dangling[0].destination = kS2;
  CHECK_THROWS_AS(KnowledgeGraph::restore("x", nodes, dangling), ValidationError);
}

TEST_CASE("1000 synthetic steps stay within the state bound") {
  KpiConfig cfg;
  cfg.name = "tput";
  cfg.has_forecast = true;
  cfg.horizon = 4;
  KpiSymbolizer sym(cfg);
  KnowledgeGraph g("tput");
  std::mt19937_64 rng(31);
  std::normal_distribution<double> step(0.0, 1.0);
  double level = 20.0;
  std::optional<SymbolicState> prev;
  std::vector<std::uint32_t> distinct;
  for (int i = 0; i < 1000; ++i) {
    level = std::max(0.5, level + step(rng));
    std::vector<double> f(4);
    double x = level;
    for (double& v : f) v = x = std::max(0.5, x + step(rng));
    const auto s = sym.observe(level, f).current;
    distinct.push_back(s.key());
    if (prev) g.update(*prev, ActionId{static_cast<std::uint32_t>(i % 3)}, s, 0.0);
    prev = s;
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  CHECK(g.node_count() == distinct.size());
  CHECK(g.node_count() <= 45);
}
