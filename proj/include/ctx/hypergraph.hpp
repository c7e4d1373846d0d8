#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

// Contextuality scenarios as hypergraphs: vertices are measurement events,
// hyperedges are complete measurements, and a probabilistic model assigns
// each vertex a probability such that every edge sums to one.
namespace ctx {

struct ContextualityScenario {
  std::vector<std::string> vertices;    // human-readable labels, id = index
  std::vector<std::vector<int>> edges;  // sorted vertex ids, canonical order
  std::vector<std::vector<int>> incidence;  // vertex id -> edge indices

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
};

// Canonicalizes and validates: edges are sorted, deduplicated as sets and
// ordered lexicographically.  Throws std::invalid_argument on an empty edge,
// an out-of-range or duplicated vertex id inside an edge, or a vertex that
// appears in no edge, naming the offending index.
ContextualityScenario new_scenario(std::vector<std::string> labels,
                                   std::vector<std::vector<int>> edges);

struct ProbabilisticModel {
  Eigen::VectorXd p;
};

// Model validation tolerances: exact inputs should pass at 1e-9; models
// evaluated from a quantum realization carry floating-point slop and are
// accepted at 1e-6.
inline constexpr double kModelTolExact = 1e-9;
inline constexpr double kModelTolLoose = 1e-6;

struct ValidationReport {
  bool ok = false;
  double max_edge_residual = 0.0;  // worst |sum_{v in e} p(v) - 1|
  int worst_edge = -1;
  double min_entry = 0.0;
  double max_entry = 0.0;
  std::vector<std::string> violations;
};

ValidationReport validate_model(const ContextualityScenario& scenario,
                                const ProbabilisticModel& model,
                                double tol = kModelTolExact);

// All unordered pairs {u, v}, u < v, that share at least one edge.
std::vector<std::pair<int, int>> exclusive_pairs(const ContextualityScenario& scenario);

// Interchange formats:
//   scenario  {"vertices": ["label", ...], "edges": [[int, ...], ...]}
//   model     {"p": [float, ...]}
std::string scenario_to_json(const ContextualityScenario& scenario);
ContextualityScenario scenario_from_json(const std::string& text);
std::string model_to_json(const ProbabilisticModel& model);
ProbabilisticModel model_from_json(const std::string& text);

}  // namespace ctx
