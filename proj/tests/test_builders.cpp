#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "ctx/builders.hpp"
#include "ctx/model_sets.hpp"

using namespace ctx;

namespace {

// A0=0, A1=1, B0=2, B1=3; contexts pair one observable per party.
MarginalScenario chsh_marginal() {
  return new_marginal_scenario(4, 2, {{0, 2}, {0, 3}, {1, 2}, {1, 3}});
}

}  // namespace

TEST_CASE("marginal scenario validation") {
  CHECK_THROWS_AS(new_marginal_scenario(2, 2, {{0, 1}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(new_marginal_scenario(2, 2, {{0}}), std::invalid_argument);
  CHECK_THROWS_AS(new_marginal_scenario(2, 2, {{0, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(new_marginal_scenario(2, 1, {}), std::invalid_argument);
  CHECK_THROWS_AS(new_marginal_scenario(2, 0, {{0, 1}}), std::invalid_argument);
  const auto x = new_marginal_scenario(2, 3, {{1, 0}, {0, 1}});
  CHECK(x.contexts.size() == 1);
  CHECK(x.contexts[0] == std::vector<int>{0, 1});
}

TEST_CASE("induced scenarios read off the definition") {
  const auto x = chsh_marginal();
  SUBCASE("induced by A0 keeps both B observables as singleton contexts") {
    const auto y = induced_scenario(x, 0);
    CHECK(y.observables == std::vector<int>{2, 3});
    CHECK(y.contexts == std::vector<std::vector<int>>{{2}, {3}});
  }
  SUBCASE("induced by B1 keeps both A observables") {
    const auto y = induced_scenario(x, 3);
    CHECK(y.observables == std::vector<int>{0, 1});
    CHECK(y.contexts == std::vector<std::vector<int>>{{0}, {1}});
  }
  SUBCASE("single context induces to the remainder") {
    const auto z = new_marginal_scenario(2, 2, {{0, 1}});
    const auto y = induced_scenario(z, 0);
    CHECK(y.observables == std::vector<int>{1});
    CHECK(y.contexts == std::vector<std::vector<int>>{{1}});
  }
  SUBCASE("measuring the only observable leaves the empty scenario") {
    const auto z = new_marginal_scenario(1, 3, {{0}});
    CHECK(induced_scenario(z, 0).empty());
  }
  SUBCASE("unknown observable throws") {
    CHECK_THROWS_AS(induced_scenario(x, 5), std::invalid_argument);
  }
}

TEST_CASE("protocol counting and enumeration") {
  SUBCASE("two jointly measurable observables give the two orderings") {
    const auto x = new_marginal_scenario(2, 2, {{0, 1}});
    CHECK(count_protocols(x) == 2.0);
    const auto protocols = enumerate_protocols(x);
    REQUIRE(protocols.size() == 2);
    CHECK(protocols[0].observable == 0);
    CHECK(protocols[1].observable == 1);
  }
  SUBCASE("single observable with three outcomes has one protocol") {
    const auto x = new_marginal_scenario(1, 3, {{0}});
    CHECK(count_protocols(x) == 1.0);
    CHECK(enumerate_protocols(x).size() == 1);
  }
  SUBCASE("the CHSH marginal scenario has 16 protocols") {
    const auto x = chsh_marginal();
    CHECK(count_protocols(x) == 16.0);
    const auto protocols = enumerate_protocols(x);
    CHECK(protocols.size() == 16);
    // 4 per root observable: the second party's setting may depend on the
    // first party's outcome in 2^2 ways... but only 2 observables remain, so
    // 2^2 branch choices collapse to 2*2 = 4 per root.
    int roots[4] = {0, 0, 0, 0};
    for (const auto& t : protocols) ++roots[t.observable];
    for (int r : roots) CHECK(r == 4);
  }
  SUBCASE("recursion identity count(X) = sum_m count(X{m})^d") {
    for (const auto& x : {chsh_marginal(), new_marginal_scenario(3, 2, {{0, 1, 2}}),
                          bell_marginal(2, 2, 3)}) {
      double total = 0.0;
      for (int m : x.observables)
        total += std::pow(std::max(count_protocols(induced_scenario(x, m)), 1.0),
                          x.outcomes);
      CHECK(count_protocols(x) == total);
    }
  }
  SUBCASE("protocol outcomes cover |O|^depth root-to-leaf paths") {
    const auto x = new_marginal_scenario(2, 2, {{0, 1}});
    const auto protocols = enumerate_protocols(x);
    const auto paths = protocol_outcomes(protocols[0]);
    REQUIRE(paths.size() == 4);
    for (const auto& path : paths) {
      REQUIRE(path.size() == 2);
      CHECK(path[0].first == 0);
      CHECK(path[1].first == 1);
    }
  }
}

TEST_CASE("marginal_to_hypergraph on hand-checked scenarios") {
  SUBCASE("one context of two observables gives one joint edge") {
    const auto x = new_marginal_scenario(2, 2, {{0, 1}});
    const auto h = marginal_to_hypergraph(x);
    CHECK(h.vertex_count() == 4);
    CHECK(h.edge_count() == 1);
    CHECK(h.edges[0].size() == 4);
  }
  SUBCASE("single observable gives d vertices and one edge") {
    const auto x = new_marginal_scenario(1, 3, {{0}});
    const auto h = marginal_to_hypergraph(x);
    CHECK(h.vertex_count() == 3);
    CHECK(h.edge_count() == 1);
  }
  SUBCASE("CHSH: 16 vertices, 12 edges after event-set dedup") {
    const auto h = marginal_to_hypergraph(chsh_marginal());
    CHECK(h.vertex_count() == 16);
    CHECK(h.edge_count() == 12);
    for (const auto& e : h.edges) CHECK(e.size() == 4);
  }
}

TEST_CASE("bell scenario structure") {
  SUBCASE("B(2,2,2) matches the CHSH hypergraph") {
    const auto s = bell_scenario(2, 2, 2);
    CHECK(s.vertex_count() == 16);
    CHECK(s.edge_count() == 12);
    CHECK(is_bell_scenario(s, 2, 2, 2));
    CHECK_FALSE(is_bell_scenario(s, 2, 2, 3));
    // simultaneous edges: all outcomes for a fixed setting pair
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        std::vector<int> expect;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            expect.push_back(bell_vertex_index(2, 2, 2, {x, y}, {a, b}));
        std::sort(expect.begin(), expect.end());
        CHECK(std::find(s.edges.begin(), s.edges.end(), expect) != s.edges.end());
      }
  }
  SUBCASE("vertex ids and labels") {
    CHECK(bell_vertex_index(2, 2, 2, {0, 0}, {0, 0}) == 0);
    CHECK(bell_vertex_index(2, 2, 2, {1, 0}, {0, 1}) == 9);
    const auto labels = bell_labels(2, 2, 2);
    REQUIRE(labels.size() == 16);
    CHECK(labels[0] == "(00|00)");
    CHECK(labels[9] == "(01|10)");
    CHECK(bell_scenario(2, 2, 2).vertices == labels);
  }
  SUBCASE("one party, two settings: two disjoint edges") {
    const auto s = bell_scenario(1, 2, 2);
    CHECK(s.vertex_count() == 4);
    CHECK(s.edge_count() == 2);
    CHECK(exclusive_pairs(s).size() == 2);
  }
  SUBCASE("one party, one setting, three outcomes: a single edge") {
    const auto s = bell_scenario(1, 1, 3);
    CHECK(s.vertex_count() == 3);
    CHECK(s.edge_count() == 1);
  }
  SUBCASE("vertex guard rejects oversized scenarios") {
    CHECK(bell_vertex_count(3, 5, 4) == 8000);  // passes the vertex guard
    CHECK_THROWS_AS(bell_marginal(2, 8, 13), std::invalid_argument);
  }
  SUBCASE("B(3,5,4) passes the vertex guard but explodes in protocols") {
    // the protocol recursion is astronomically large; the budget refuses it
    CHECK(count_protocols(bell_marginal(3, 5, 4)) > 1e12);
    CHECK_THROWS_AS(bell_scenario(3, 5, 4), std::length_error);
  }
}

TEST_CASE("correlation tables map onto the Bell hypergraph") {
  const auto s = bell_scenario(2, 2, 2);
  SUBCASE("PR box lands on the right vertices") {
    const auto model = model_from_correlations(pr_box(), s);
    CHECK(validate_model(s, model).ok);
    // at settings x=1,y=1 the PR box supports a xor b = 1
    CHECK(model.p(bell_vertex_index(2, 2, 2, {1, 1}, {0, 0})) == 0.0);
    CHECK(model.p(bell_vertex_index(2, 2, 2, {1, 1}, {0, 1})) == 0.5);
    CHECK(model.p(bell_vertex_index(2, 2, 2, {1, 1}, {1, 0})) == 0.5);
    CHECK(model.p(bell_vertex_index(2, 2, 2, {0, 0}, {0, 1})) == 0.0);
    CHECK(model.p(bell_vertex_index(2, 2, 2, {0, 0}, {0, 0})) == 0.5);
  }
  SUBCASE("signalling tables are rejected on a correlated edge") {
    // Alice's outcome deterministically equals Bob's *setting*: each
    // conditional row is normalized, but adaptive edges see total mass 2.
    CorrelationTable c;
    c.n = 2;
    c.m = 2;
    c.d = 2;
    c.table.assign(4, std::vector<double>(4, 0.0));
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) c.table[2 * x + y][2 * y + 0] = 1.0;
    CHECK_THROWS_WITH_AS(model_from_correlations(c, s),
                         doctest::Contains("signalling"), std::invalid_argument);
  }
  SUBCASE("malformed tables are rejected") {
    CorrelationTable c = pr_box();
    c.table[2][1] = 0.75;  // row no longer normalized
    CHECK_THROWS_AS(model_from_correlations(c, s), std::invalid_argument);
    CorrelationTable d = pr_box();
    d.table.pop_back();
    CHECK_THROWS_AS(model_from_correlations(d, s), std::invalid_argument);
  }
}

TEST_CASE("marginal and correlation JSON round-trips") {
  const auto x = chsh_marginal();
  const auto back = marginal_from_json(marginal_to_json(x));
  CHECK(back.observables == x.observables);
  CHECK(back.outcomes == x.outcomes);
  CHECK(back.contexts == x.contexts);

  const auto c = isotropic_box(1.0 / std::sqrt(2.0));
  const auto cback = correlations_from_json(correlations_to_json(c));
  CHECK(cback.n == c.n);
  CHECK(cback.table == c.table);
}
