#include "ctx/model_sets.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace ctx {

namespace {

constexpr int kMaxQuantumDim = 64;

using Complex = std::complex<double>;

Eigen::MatrixXd real_embedding(const Eigen::MatrixXcd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::MatrixXd out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = m.real();
  out.topRightCorner(d, d) = -m.imag();
  out.bottomLeftCorner(d, d) = m.imag();
  out.bottomRightCorner(d, d) = m.real();
  return out;
}

double hermiticity_residual(const Eigen::MatrixXcd& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace

ProbabilisticModel indicator_model(const DeterministicModel& model, int vertex_count) {
  ProbabilisticModel out;
  out.p = Eigen::VectorXd::Zero(vertex_count);
  for (int v : model.selected) {
    if (v < 0 || v >= vertex_count)
      throw std::out_of_range("indicator_model: vertex id out of range");
    out.p(v) = 1.0;
  }
  return out;
}

std::vector<DeterministicModel> enumerate_deterministic(
    const ContextualityScenario& scenario, long node_budget) {
  const int n = scenario.vertex_count();
  const int ne = scenario.edge_count();
  std::vector<DeterministicModel> results;
  std::vector<char> vertex_banned(n, 0);
  std::vector<char> edge_covered(ne, 0);
  std::vector<int> selected;
  long nodes = 0;

  // Exclusive partners, precomputed for the ban step.
  std::vector<std::vector<int>> partners(n);
  for (const auto& [u, v] : exclusive_pairs(scenario)) {
    partners[u].push_back(v);
    partners[v].push_back(u);
  }

  const std::function<void()> search = [&]() {
    if (++nodes > node_budget)
      throw std::length_error(
          "enumerate_deterministic: search exceeded the node budget of " +
          std::to_string(node_budget));

    int best_edge = -1;
    int best_count = std::numeric_limits<int>::max();
    for (int e = 0; e < ne; ++e) {
      if (edge_covered[e]) continue;
      int count = 0;
      for (int v : scenario.edges[e])
        if (!vertex_banned[v]) ++count;
      if (count < best_count) {
        best_count = count;
        best_edge = e;
      }
    }
    if (best_edge < 0) {
      DeterministicModel model;
      model.selected = selected;
      std::sort(model.selected.begin(), model.selected.end());
      results.push_back(std::move(model));
      return;
    }
    if (best_count == 0) return;

    for (int v : scenario.edges[best_edge]) {
      if (vertex_banned[v]) continue;
      // Select v: it covers its edges; everything sharing an edge with v is
      // barred from selection.  A barred edge-mate already selected cannot
      // happen because selection bans mates immediately.
      std::vector<int> newly_banned;
      std::vector<int> newly_covered;
      vertex_banned[v] = 1;
      newly_banned.push_back(v);
      for (int u : partners[v]) {
        if (!vertex_banned[u]) {
          vertex_banned[u] = 1;
          newly_banned.push_back(u);
        }
      }
      for (int e : scenario.incidence[v]) {
        if (!edge_covered[e]) {
          edge_covered[e] = 1;
          newly_covered.push_back(e);
        }
      }
      selected.push_back(v);
      search();
      selected.pop_back();
      for (int u : newly_banned) vertex_banned[u] = 0;
      for (int e : newly_covered) edge_covered[e] = 0;
    }
  };
  search();
  std::sort(results.begin(), results.end(),
            [](const DeterministicModel& a, const DeterministicModel& b) {
              return a.selected < b.selected;
            });
  return results;
}

ProbabilisticModel evaluate_decomposition(const ClassicalDecomposition& decomposition,
                                          int vertex_count) {
  if (decomposition.weights.size() !=
      static_cast<Eigen::Index>(decomposition.support.size()))
    throw std::invalid_argument("decomposition: weight/support length mismatch");
  ProbabilisticModel out;
  out.p = Eigen::VectorXd::Zero(vertex_count);
  for (size_t l = 0; l < decomposition.support.size(); ++l)
    for (int v : decomposition.support[l].selected)
      out.p(v) += decomposition.weights(l);
  return out;
}

ClassicalCheckResult classical_check(const ContextualityScenario& scenario,
                                     const ProbabilisticModel& model,
                                     long node_budget) {
  const ValidationReport valid = validate_model(scenario, model, kModelTolLoose);
  if (!valid.ok)
    throw std::invalid_argument("classical_check: model fails validation: " +
                                valid.violations.front());
  ClassicalCheckResult result;
  const std::vector<DeterministicModel> deterministic =
      enumerate_deterministic(scenario, node_budget);
  if (deterministic.empty()) {
    result.vacuous = true;
    return result;
  }

  const int n = scenario.vertex_count();
  const int l = static_cast<int>(deterministic.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, l);
  Eigen::VectorXd b(n + 1);
  for (int j = 0; j < l; ++j)
    for (int v : deterministic[j].selected) a(v, j) = 1.0;
  for (int v = 0; v < n; ++v) b(v) = model.p(v);
  a.row(n).setOnes();
  b(n) = 1.0;

  const kernel::LpResult lp = kernel::lp_phase1(a, b);
  result.margin = lp.margin;
  result.lp_pivots = lp.pivots;
  result.classical = lp.feasible;
  if (lp.feasible) {
    ClassicalDecomposition decomposition;
    std::vector<double> weights;
    for (int j = 0; j < l; ++j) {
      if (lp.x(j) > 1e-12) {
        decomposition.support.push_back(deterministic[j]);
        weights.push_back(lp.x(j));
      }
    }
    decomposition.weights =
        Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
    const ProbabilisticModel reproduced =
        evaluate_decomposition(decomposition, n);
    const double residual = (reproduced.p - model.p).cwiseAbs().maxCoeff();
    if (residual > 1e-7)
      throw std::runtime_error(
          "classical_check: decomposition reproduces the model only to " +
          std::to_string(residual));
    result.decomposition = std::move(decomposition);
  }
  return result;
}

certificates::Q1Certificate classical_to_q1_certificate(
    const ClassicalDecomposition& decomposition,
    const ContextualityScenario& scenario) {
  const int n = scenario.vertex_count();
  if (decomposition.support.empty())
    throw std::invalid_argument("classical_to_q1_certificate: empty decomposition");
  const double total = decomposition.weights.sum();
  if (std::abs(total - 1.0) > 1e-9 || decomposition.weights.minCoeff() < -1e-12)
    throw std::invalid_argument(
        "classical_to_q1_certificate: weights are not a distribution");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (size_t l = 0; l < decomposition.support.size(); ++l) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
    w(0) = 1.0;
    for (int v : decomposition.support[l].selected) w(v + 1) = 1.0;
    m += decomposition.weights(l) * w * w.transpose();
  }
  certificates::Q1Certificate cert;
  cert.m = m;
  cert.model = evaluate_decomposition(decomposition, n).p;
  return cert;
}

QuantumEvalResult quantum_evaluate(const QuantumRealization& realization,
                                   const ContextualityScenario& scenario) {
  const int d = realization.dim;
  const int n = scenario.vertex_count();
  if (d < 1 || d > kMaxQuantumDim)
    throw std::invalid_argument("quantum_evaluate: dimension must be in 1.." +
                                std::to_string(kMaxQuantumDim));
  if (realization.rho.rows() != d || realization.rho.cols() != d)
    throw std::invalid_argument("quantum_evaluate: rho has the wrong shape");
  if (static_cast<int>(realization.projectors.size()) != n)
    throw std::invalid_argument("quantum_evaluate: expected one projector per vertex");

  if (hermiticity_residual(realization.rho) > 1e-12)
    throw std::invalid_argument("quantum_evaluate: rho is not Hermitian");
  if (std::abs(realization.rho.trace().real() - 1.0) > 1e-12 ||
      std::abs(realization.rho.trace().imag()) > 1e-12)
    throw std::invalid_argument("quantum_evaluate: rho does not have unit trace");
  const kernel::EighResult rho_eig = kernel::eigh(real_embedding(realization.rho));
  if (rho_eig.eigenvalues(0) < -1e-12)
    throw std::invalid_argument("quantum_evaluate: rho has eigenvalue " +
                                std::to_string(rho_eig.eigenvalues(0)));

  QuantumEvalResult result;
  for (int v = 0; v < n; ++v) {
    const Eigen::MatrixXcd& pv = realization.projectors[v];
    if (pv.rows() != d || pv.cols() != d)
      throw std::invalid_argument("quantum_evaluate: projector " + std::to_string(v) +
                                  " has the wrong shape");
    const double herm = hermiticity_residual(pv);
    const double idem = (pv * pv - pv).cwiseAbs().maxCoeff();
    result.max_projector_residual = std::max({result.max_projector_residual, herm, idem});
    if (herm > 1e-10 || idem > 1e-10)
      throw std::invalid_argument("quantum_evaluate: projector " + std::to_string(v) +
                                  " is not a Hermitian idempotent");
  }
  for (int e = 0; e < scenario.edge_count(); ++e) {
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
    for (int v : scenario.edges[e]) sum += realization.projectors[v];
    const double residual =
        (sum - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
    result.max_edge_residual = std::max(result.max_edge_residual, residual);
    if (residual > 1e-10)
      throw std::invalid_argument("quantum_evaluate: edge " + std::to_string(e) +
                                  " does not resolve the identity (residual " +
                                  std::to_string(residual) + ")");
  }

  result.model.p = Eigen::VectorXd(n);
  for (int v = 0; v < n; ++v)
    result.model.p(v) = (realization.rho * realization.projectors[v]).trace().real();
  const ValidationReport valid = validate_model(scenario, result.model, kModelTolLoose);
  result.normalization_residual = valid.max_edge_residual;
  if (!valid.ok)
    throw std::runtime_error("quantum_evaluate: evaluated model fails validation: " +
                             valid.violations.front());
  return result;
}

certificates::Q1Certificate quantum_to_q1_certificate(
    const QuantumRealization& realization, const ContextualityScenario& scenario) {
  const QuantumEvalResult eval = quantum_evaluate(realization, scenario);
  const int n = scenario.vertex_count();
  Eigen::MatrixXd m(n + 1, n + 1);
  m(0, 0) = 1.0;
  for (int v = 0; v < n; ++v) {
    m(0, v + 1) = eval.model.p(v);
    m(v + 1, 0) = eval.model.p(v);
  }
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      m(u + 1, v + 1) =
          (realization.rho * realization.projectors[u] * realization.projectors[v])
              .trace()
              .real();
  certificates::Q1Certificate cert;
  cert.m = 0.5 * (m + m.transpose());
  cert.model = eval.model.p;
  return cert;
}

namespace {

Eigen::MatrixXcd qubit_projector(double z, double x, int outcome) {
  // (I + s * (z Z + x X)) / 2 with s = +-1; (z, x) must be a unit vector.
  const double s = (outcome == 0) ? 1.0 : -1.0;
  Eigen::MatrixXcd p(2, 2);
  p(0, 0) = Complex(0.5 * (1.0 + s * z), 0.0);
  p(0, 1) = Complex(0.5 * s * x, 0.0);
  p(1, 0) = Complex(0.5 * s * x, 0.0);
  p(1, 1) = Complex(0.5 * (1.0 - s * z), 0.0);
  return p;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

QuantumRealization noisy_tsirelson_realization(double lambda) {
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  if (lambda < 0.0 || lambda > inv_root2 + 1e-12)
    throw std::invalid_argument(
        "noisy_tsirelson_realization: lambda must lie in [0, 1/sqrt(2)]");
  const double mix = std::min(1.0, lambda * std::sqrt(2.0));

  QuantumRealization r;
  r.dim = 4;
  Eigen::MatrixXcd pure = Eigen::MatrixXcd::Zero(4, 4);
  // |phi+> = (|00> + |11>)/sqrt(2)
  pure(0, 0) = pure(0, 3) = pure(3, 0) = pure(3, 3) = Complex(0.5, 0.0);
  r.rho = mix * pure + (1.0 - mix) * 0.25 * Eigen::MatrixXcd::Identity(4, 4);

  // First party: Z and X.  Second party: (Z+X)/sqrt(2) and (Z-X)/sqrt(2).
  const double za[2] = {1.0, 0.0};
  const double xa[2] = {0.0, 1.0};
  const double zb[2] = {inv_root2, inv_root2};
  const double xb[2] = {inv_root2, -inv_root2};

  r.projectors.resize(16);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          r.projectors[bell_vertex_index(2, 2, 2, {x, y}, {a, b})] =
              kron(qubit_projector(za[x], xa[x], a), qubit_projector(zb[y], xb[y], b));
  return r;
}

QuantumRealization tsirelson_realization() {
  return noisy_tsirelson_realization(1.0 / std::sqrt(2.0));
}

CorrelationTable pr_box() {
  CorrelationTable c;
  c.n = 2;
  c.m = 2;
  c.d = 2;
  c.table.assign(4, std::vector<double>(4, 0.0));
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if ((a ^ b) == (x & y)) c.table[2 * x + y][2 * a + b] = 0.5;
  return c;
}

CorrelationTable uniform_box() {
  CorrelationTable c;
  c.n = 2;
  c.m = 2;
  c.d = 2;
  c.table.assign(4, std::vector<double>(4, 0.25));
  return c;
}

CorrelationTable isotropic_box(double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("isotropic_box: lambda must lie in [0, 1]");
  CorrelationTable c = pr_box();
  for (auto& row : c.table)
    for (double& v : row) v = lambda * v + (1.0 - lambda) * 0.25;
  return c;
}

CorrelationTable tsirelson_box() { return isotropic_box(1.0 / std::sqrt(2.0)); }

double chsh_value(const ContextualityScenario& scenario,
                  const ProbabilisticModel& model) {
  if (!is_bell_scenario(scenario, 2, 2, 2))
    throw std::invalid_argument("chsh_value: scenario is not B(2,2,2)");
  if (model.p.size() != 16)
    throw std::invalid_argument("chsh_value: model has the wrong length");
  double s = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double sign_xy = (x & y) ? -1.0 : 1.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double sign_ab = ((a + b) % 2) ? -1.0 : 1.0;
          s += sign_xy * sign_ab * model.p((2 * x + y) * 4 + 2 * a + b);
        }
    }
  return s;
}

namespace {

nlohmann::json complex_matrix_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      rows.push_back({m(i, j).real(), m(i, j).imag()});
  return rows;
}

Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json& j, int dim) {
  if (static_cast<int>(j.size()) != dim * dim)
    throw std::invalid_argument("realization json: matrix entry count mismatch");
  Eigen::MatrixXcd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const auto& entry = j[i * dim + k];
      if (entry.size() != 2)
        throw std::invalid_argument("realization json: entries must be [re, im]");
      m(i, k) = Complex(entry[0].get<double>(), entry[1].get<double>());
    }
  return m;
}

}  // namespace

std::string realization_to_json(const QuantumRealization& realization) {
  nlohmann::json j;
  j["dim"] = realization.dim;
  j["rho"] = complex_matrix_json(realization.rho);
  nlohmann::json projectors = nlohmann::json::object();
  for (size_t v = 0; v < realization.projectors.size(); ++v)
    projectors[std::to_string(v)] = complex_matrix_json(realization.projectors[v]);
  j["projectors"] = projectors;
  return j.dump(2);
}

QuantumRealization realization_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"dim", "rho", "projectors"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("realization json: missing '") + key + "'");
  QuantumRealization r;
  r.dim = j["dim"].get<int>();
  r.rho = complex_matrix_from_json(j["rho"], r.dim);
  const auto& projectors = j["projectors"];
  r.projectors.resize(projectors.size());
  for (auto it = projectors.begin(); it != projectors.end(); ++it) {
    const size_t v = std::stoul(it.key());
    if (v >= r.projectors.size())
      throw std::invalid_argument("realization json: projector keys must be 0..n-1");
    r.projectors[v] = complex_matrix_from_json(it.value(), r.dim);
  }
  return r;
}

}  // namespace ctx
