#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "foresight/error.hpp"
#include "foresight/explainer.hpp"

using namespace foresight;

namespace {

SymbolicState st(Predicate p, int c) {
  SymbolicState s;
  s.predicate = p;
  s.category = static_cast<std::uint8_t>(c);
  return s;
}

ActionDistribution dist(std::initializer_list<std::pair<std::uint32_t, double>> xs) {
  ActionDistribution d;
  for (const auto& [a, p] : xs) d.emplace_back(ActionId{a}, p);
  return d;
}

// Direct formula over a dense action axis.
double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> ps, qs;
  double zp = 0, zq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0 && q[i] == 0.0) continue;
    ps.push_back(p[i] + 1e-9);
    qs.push_back(q[i] + 1e-9);
    zp += ps.back();
    zq += qs.back();
  }
  double kl = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) kl += ps[i] / zp * std::log((ps[i] / zp) / (qs[i] / zq));
  return std::max(kl, 0.0);
}

}  // namespace

TEST_CASE("kl_divergence examples") {
  CHECK(kl_divergence(dist({{0, 0.8}, {1, 0.2}}), dist({{0, 0.5}, {1, 0.5}})) == doctest::Approx(0.1927).epsilon(1e-3));
  const double hand = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(kl_divergence(dist({{0, 0.9}, {1, 0.1}}), dist({{0, 0.5}, {1, 0.5}})) == doctest::Approx(hand).epsilon(1e-7));
  CHECK(kl_divergence(dist({{0, 0.3}, {1, 0.7}}), dist({{0, 0.3}, {1, 0.7}})) == 0.0);
  CHECK(kl_divergence({}, {}) == 0.0);
}

TEST_CASE("kl_divergence smooths disjoint supports to a finite value") {
  const double kl = kl_divergence(dist({{0, 1.0}}), dist({{1, 1.0}}));
  CHECK(std::isfinite(kl));
  CHECK(kl > 10.0);
  CHECK(kl == doctest::Approx(kl_oracle({1.0, 0.0}, {0.0, 1.0})).epsilon(1e-12));
}

TEST_CASE("property: kl_divergence is non-negative and matches the direct formula") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(6), q(6);
    double zp = 0, zq = 0;
    for (int i = 0; i < 6; ++i) {
      p[i] = u(rng) < 0.3 ? 0.0 : u(rng);
      q[i] = u(rng) < 0.3 ? 0.0 : u(rng);
      zp += p[i];
      zq += q[i];
    }
    if (zp == 0 || zq == 0) continue;
    ActionDistribution dp, dq;
    for (std::uint32_t i = 0; i < 6; ++i) {
      p[i] /= zp;
      q[i] /= zq;
      if (p[i] > 0) dp.emplace_back(ActionId{i}, p[i]);
      if (q[i] > 0) dq.emplace_back(ActionId{i}, q[i]);
    }
    const double kl = kl_divergence(dp, dq);
    REQUIRE(kl >= 0.0);
    REQUIRE(kl == doctest::Approx(kl_oracle(p, q)).epsilon(1e-9));
  }
}

TEST_CASE("baseline is the mean of the non-empty conditionals") {
  const std::vector<ActionDistribution> two{dist({{0, 0.9}, {1, 0.1}}), dist({{0, 0.1}, {1, 0.9}})};
  const auto b = baseline_distribution(two);
  REQUIRE(b.size() == 2);
  CHECK(b[0].second == doctest::Approx(0.5));
  CHECK(b[1].second == doctest::Approx(0.5));

  const std::vector<ActionDistribution> with_empty{dist({{2, 1.0}}), {}, dist({{0, 0.5}, {2, 0.5}})};
  const auto c = baseline_distribution(with_empty);
  REQUIRE(c.size() == 2);
  CHECK(c[0].first == ActionId{0});
  CHECK(c[0].second == doctest::Approx(0.25));
  CHECK(c[1].second == doctest::Approx(0.75));
  CHECK(baseline_distribution(std::vector<ActionDistribution>{{}, {}}).empty());
}

TEST_CASE("most likely action breaks ties by the space's order") {
  const auto space = ActionSpace::ordered("a", {1, 2, 3});
  CHECK(most_likely_action(dist({{0, 0.2}, {1, 0.4}, {2, 0.4}}), space) == ActionId{1});
  CHECK(most_likely_action(dist({{2, 0.6}, {1, 0.4}}), space) == ActionId{2});
  CHECK_THROWS_AS(most_likely_action({}, space), ColdStartError);
}

TEST_CASE("two-KPI example: aligned KPI scores KL, the other scores 0") {
  const auto space = ActionSpace::categorical("Policy", "", {"a1", "a2"});
  const auto s = st(Predicate::Const, 2);
  const auto t = st(Predicate::Inc, 1);
  std::vector<KnowledgeGraph> graphs{KnowledgeGraph("k1"), KnowledgeGraph("k2")};
  for (int i = 0; i < 9; ++i) graphs[0].update(s, ActionId{0}, t, 0.0);
  graphs[0].update(s, ActionId{1}, t, 0.0);
  graphs[1].update(s, ActionId{0}, t, 0.0);
  for (int i = 0; i < 9; ++i) graphs[1].update(s, ActionId{1}, t, 0.0);
  const std::vector<SymbolicState> joint{s, s};
  const auto r = explain(5, graphs, joint, ActionId{0}, space);
  CHECK(r.timestep == 5);
  CHECK_FALSE(r.cold_start);
  const double hand = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(r.per_kpi[0].score == doctest::Approx(hand).epsilon(1e-7));
  CHECK(r.per_kpi[0].score == doctest::Approx(0.368).epsilon(1e-3));
  CHECK(r.per_kpi[0].alignment == 1.0);
  CHECK(*r.per_kpi[0].a_star == ActionId{0});
  CHECK(r.per_kpi[1].score == 0.0);
  CHECK(r.per_kpi[1].kl > 0.0);
  CHECK(*r.per_kpi[1].a_star == ActionId{1});
}

TEST_CASE("KPI equal to the baseline scores 0") {
  const auto space = ActionSpace::ordered("a", {1, 2});
  const auto s = st(Predicate::Const, 2);
  std::vector<KnowledgeGraph> graphs{KnowledgeGraph("k1"), KnowledgeGraph("k2")};
  for (auto& g : graphs) {
    g.update(s, ActionId{0}, s, 0.0);
    g.update(s, ActionId{1}, s, 0.0);
  }
  const auto r = explain(0, graphs, std::vector<SymbolicState>{s, s}, ActionId{1}, space);
  CHECK(r.per_kpi[0].score == 0.0);
  CHECK(r.per_kpi[1].score == 0.0);
}

TEST_CASE("unseen state is a cold start with score 0") {
  const auto space = ActionSpace::ordered("a", {1, 2});
  const auto s = st(Predicate::Const, 2);
  const auto u = st(Predicate::Dec, 0);
  std::vector<KnowledgeGraph> graphs{KnowledgeGraph("k1"), KnowledgeGraph("k2")};
  graphs[0].update(s, ActionId{0}, s, 0.0);
  const auto r = explain(0, graphs, std::vector<SymbolicState>{s, u}, ActionId{0}, space);
  CHECK_FALSE(r.cold_start);
  CHECK_FALSE(r.per_kpi[0].cold_start);
  CHECK(r.per_kpi[1].cold_start);
  CHECK(r.per_kpi[1].score == 0.0);
  CHECK_FALSE(r.per_kpi[1].a_star.has_value());
  // Only one KPI contributes, so it is its own baseline.
  CHECK(r.per_kpi[0].score == 0.0);

  const auto all_cold = explain(0, graphs, std::vector<SymbolicState>{u, u}, ActionId{0}, space);
  CHECK(all_cold.cold_start);
  CHECK_THROWS_AS(explain(0, graphs, std::vector<SymbolicState>{u}, ActionId{0}, space), ValidationError);
}

TEST_CASE("influence score matches a brute-force count-table implementation") {
  std::mt19937_64 rng(53);
  auto space = ActionSpace::ordered("a", {1, 2, 3, 4, 5}, 1.3);
  constexpr int kKpis = 4;
  std::vector<KnowledgeGraph> graphs;
  for (int k = 0; k < kKpis; ++k) graphs.emplace_back("k" + std::to_string(k));
  // counts[k][state][action]
  std::vector<std::map<std::uint32_t, std::map<std::uint32_t, double>>> counts(kKpis);
  std::uniform_int_distribution<int> cat(0, 2), act(0, 4), pred(0, 2);
  for (int n = 0; n < 600; ++n) {
    const ActionId a{static_cast<std::uint32_t>(act(rng))};
    for (int k = 0; k < kKpis; ++k) {
      const auto s = st(static_cast<Predicate>(pred(rng)), cat(rng));
      const auto t = st(static_cast<Predicate>(pred(rng)), cat(rng));
      // Skew each KPI toward its own action preference.
      const ActionId ak = n % (k + 2) == 0 ? ActionId{static_cast<std::uint32_t>(k)} : a;
      graphs[k].update(s, ak, t, 0.0);
      counts[k][s.key()][ak.value] += 1.0;
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SymbolicState> joint;
    for (int k = 0; k < kKpis; ++k) joint.push_back(st(static_cast<Predicate>(pred(rng)), cat(rng)));
    const ActionId a_t{static_cast<std::uint32_t>(act(rng))};
    const auto report = explain(trial, graphs, joint, a_t, space);

    // Direct formula.
    std::vector<std::vector<double>> p(kKpis, std::vector<double>(5, 0.0));
    std::vector<bool> has(kKpis, false);
    int used = 0;
    for (int k = 0; k < kKpis; ++k) {
      auto it = counts[k].find(joint[k].key());
      if (it == counts[k].end()) continue;
      double total = 0;
      for (const auto& [a, c] : it->second) total += c;
      for (const auto& [a, c] : it->second) p[k][a] = c / total;
      has[k] = true;
      ++used;
    }
    std::vector<double> base(5, 0.0);
    for (int k = 0; k < kKpis; ++k)
      if (has[k])
        for (int a = 0; a < 5; ++a) base[a] += p[k][a] / used;
    for (int k = 0; k < kKpis; ++k) {
      if (!has[k]) {
        REQUIRE(report.per_kpi[k].score == 0.0);
        REQUIRE(report.per_kpi[k].cold_start);
        continue;
      }
      int star = 0;
      for (int a = 1; a < 5; ++a)
        if (p[k][a] > p[k][star]) star = a;
      const double d = std::abs(static_cast<double>(a_t.value) - star);
      const double delta = std::exp(-d * d / (2 * 1.3 * 1.3));
      const double expected = kl_oracle(p[k], base) * delta;
      REQUIRE(report.per_kpi[k].a_star->value == static_cast<std::uint32_t>(star));
      REQUIRE(std::abs(report.per_kpi[k].score - expected) <= 1e-9);
    }
  }
}
