#include "ctx/hypergraph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace ctx {

ContextualityScenario new_scenario(std::vector<std::string> labels,
                                   std::vector<std::vector<int>> edges) {
  const int n = static_cast<int>(labels.size());
  if (n == 0) throw std::invalid_argument("scenario: no vertices");

  std::set<std::vector<int>> canonical;
  for (size_t k = 0; k < edges.size(); ++k) {
    std::vector<int>& e = edges[k];
    if (e.empty())
      throw std::invalid_argument("scenario: edge " + std::to_string(k) + " is empty");
    std::sort(e.begin(), e.end());
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] < 0 || e[i] >= n)
        throw std::invalid_argument("scenario: edge " + std::to_string(k) +
                                    " references vertex " + std::to_string(e[i]) +
                                    " outside 0.." + std::to_string(n - 1));
      if (i > 0 && e[i] == e[i - 1])
        throw std::invalid_argument("scenario: edge " + std::to_string(k) +
                                    " repeats vertex " + std::to_string(e[i]));
    }
    canonical.insert(e);
  }

  ContextualityScenario s;
  s.vertices = std::move(labels);
  s.edges.assign(canonical.begin(), canonical.end());
  s.incidence.assign(n, {});
  for (int k = 0; k < s.edge_count(); ++k)
    for (int v : s.edges[k]) s.incidence[v].push_back(k);
  for (int v = 0; v < n; ++v)
    if (s.incidence[v].empty())
      throw std::invalid_argument("scenario: vertex " + std::to_string(v) +
                                  " appears in no edge");
  return s;
}

ValidationReport validate_model(const ContextualityScenario& scenario,
                                const ProbabilisticModel& model, double tol) {
  ValidationReport report;
  const int n = scenario.vertex_count();
  if (model.p.size() != n) {
    report.violations.push_back("model has " + std::to_string(model.p.size()) +
                                " entries, scenario has " + std::to_string(n) +
                                " vertices");
    return report;
  }
  report.min_entry = model.p.minCoeff();
  report.max_entry = model.p.maxCoeff();
  if (report.min_entry < -tol)
    report.violations.push_back("entry below 0 by " +
                                std::to_string(-report.min_entry));
  if (report.max_entry > 1.0 + tol)
    report.violations.push_back("entry above 1 by " +
                                std::to_string(report.max_entry - 1.0));
  for (int k = 0; k < scenario.edge_count(); ++k) {
    double sum = 0.0;
    for (int v : scenario.edges[k]) sum += model.p(v);
    const double residual = std::abs(sum - 1.0);
    if (residual > report.max_edge_residual) {
      report.max_edge_residual = residual;
      report.worst_edge = k;
    }
  }
  if (report.max_edge_residual > tol)
    report.violations.push_back(
        "edge " + std::to_string(report.worst_edge) + " sums to 1 " +
        std::to_string(report.max_edge_residual) + " away from 1");
  report.ok = report.violations.empty();
  return report;
}

std::vector<std::pair<int, int>> exclusive_pairs(const ContextualityScenario& scenario) {
  std::set<std::pair<int, int>> pairs;
  for (const auto& e : scenario.edges)
    for (size_t i = 0; i < e.size(); ++i)
      for (size_t j = i + 1; j < e.size(); ++j)
        pairs.emplace(e[i], e[j]);
  return {pairs.begin(), pairs.end()};
}

std::string scenario_to_json(const ContextualityScenario& scenario) {
  nlohmann::json j;
  j["vertices"] = scenario.vertices;
  j["edges"] = scenario.edges;
  return j.dump(2);
}

ContextualityScenario scenario_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("vertices") || !j.contains("edges"))
    throw std::invalid_argument("scenario json: missing 'vertices' or 'edges'");
  return new_scenario(j["vertices"].get<std::vector<std::string>>(),
                      j["edges"].get<std::vector<std::vector<int>>>());
}

std::string model_to_json(const ProbabilisticModel& model) {
  nlohmann::json j;
  j["p"] = std::vector<double>(model.p.data(), model.p.data() + model.p.size());
  return j.dump(2);
}

ProbabilisticModel model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("p")) throw std::invalid_argument("model json: missing 'p'");
  const auto values = j["p"].get<std::vector<double>>();
  ProbabilisticModel model;
  model.p = Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
  return model;
}

}  // namespace ctx
