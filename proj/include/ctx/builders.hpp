#pragma once

#include "ctx/hypergraph.hpp"

#include <string>
#include <vector>

// Builders that turn marginal scenarios (observables, maximal contexts,
// shared outcome set) into contextuality hypergraphs.  Vertices of the
// hypergraph are (context, assignment) events; edges come from adaptive
// measurement protocols, where each observed outcome selects the next
// protocol on the induced scenario.
namespace ctx {

struct MarginalScenario {
  std::vector<int> observables;            // sorted distinct ids
  int outcomes = 0;                        // shared outcome arity d
  std::vector<std::vector<int>> contexts;  // sorted ids, canonical order

  bool empty() const { return observables.empty(); }
};

// Observable ids 0..observables-1.  Contexts are deduplicated and sorted;
// they must be non-empty subsets, jointly cover every observable, and be
// maximal (no context contained in another).
MarginalScenario new_marginal_scenario(int observables, int outcomes,
                                       std::vector<std::vector<int>> contexts);

// Scenario seen after measuring m: observables co-measurable with m, with
// contexts {C \ {m} : m in C}.  Observable ids keep their original values.
MarginalScenario induced_scenario(const MarginalScenario& x, int m);

// Adaptive measurement protocol: measure `observable`, then continue with
// branches[outcome] on the induced scenario.  The empty protocol (for the
// empty scenario) has observable = -1 and no branches.
struct MeasurementProtocol {
  int observable = -1;
  std::vector<MeasurementProtocol> branches;
};

// Number of protocols of x, computed by the recursion
// count(X) = sum_m count(X after m)^d without materializing them.
// Returned as double so oversized scenarios report their size instead of
// overflowing.
double count_protocols(const MarginalScenario& x);

// All protocols in deterministic order (first observable ascending, branch
// assignments lexicographic).  Throws std::length_error when the protocol
// count exceeds the budget.
std::vector<MeasurementProtocol> enumerate_protocols(const MarginalScenario& x,
                                                     double budget = 1e6);

// Root-to-leaf outcome paths of a protocol, each a list of
// (observable, outcome) pairs in measurement order.
std::vector<std::vector<std::pair<int, int>>> protocol_outcomes(
    const MeasurementProtocol& t);

// Vertex layout of the hypergraph of a marginal scenario: vertices grouped
// by context in canonical order, assignments in lexicographic order over the
// context's sorted observables.
int marginal_vertex_count(const MarginalScenario& x);
int marginal_vertex_index(const MarginalScenario& x, int context_index,
                          const std::vector<int>& assignment);

// The hypergraph H[X]: one vertex per (context, assignment), one edge per
// protocol (deduplicated as event sets).  Probabilistic models on H[X]
// are exactly the non-signalling behaviours of the marginal scenario.
ContextualityScenario marginal_to_hypergraph(const MarginalScenario& x,
                                             double protocol_budget = 1e6);

// Bell scenario B(n, m, d): n parties, m observables each (observable ids
// party*m + setting), d outcomes; contexts pick one observable per party.
// Vertices are labelled "(a1..an|x1..xn)".  Refuses (m*d)^n > 1e4 vertices.
MarginalScenario bell_marginal(int parties, int settings, int outcomes);
ContextualityScenario bell_scenario(int parties, int settings, int outcomes,
                                    double protocol_budget = 1e6);
long long bell_vertex_count(int parties, int settings, int outcomes);
std::vector<std::string> bell_labels(int parties, int settings, int outcomes);
int bell_vertex_index(int parties, int settings, int outcomes,
                      const std::vector<int>& settings_choice,
                      const std::vector<int>& outcomes_choice);
bool is_bell_scenario(const ContextualityScenario& s, int parties, int settings,
                      int outcomes);

// Conditional probability table P(a-vec | x-vec) for B(n, m, d); the outer
// index runs over setting vectors lexicographically, the inner one over
// outcome vectors.  Interchange format:
//   {"n": int, "m": int, "d": int, "P": [[float, ...], ...]}
struct CorrelationTable {
  int n = 0;
  int m = 0;
  int d = 0;
  std::vector<std::vector<double>> table;
};

std::string correlations_to_json(const CorrelationTable& c);
CorrelationTable correlations_from_json(const std::string& text);

// Marginal scenario interchange format (observable ids 0..k-1):
//   {"observables": int, "contexts": [[int, ...], ...], "outcomes": int}
std::string marginal_to_json(const MarginalScenario& x);
MarginalScenario marginal_from_json(const std::string& text);

// Places a correlation table onto the matching Bell hypergraph.  Each
// conditional distribution must be normalized; signalling tables fail edge
// normalization on some correlated edge and are rejected with that edge
// reported.
ProbabilisticModel model_from_correlations(const CorrelationTable& c,
                                           const ContextualityScenario& s);

}  // namespace ctx
