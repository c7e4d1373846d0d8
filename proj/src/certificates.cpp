#include "ctx/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ctx::certificates {

namespace {

// Vertices with p(v) = 0 or 1 have zero fluctuation variance; PSD forces
// their gamma rows to vanish, so they are removed before solving.
constexpr double kDeterministicTol = 1e-9;

void note(VerifyReport& report, std::string what, double residual, double tol) {
  report.max_affine_residual = std::max(report.max_affine_residual, residual);
  if (residual > tol)
    report.violations.push_back({std::move(what), residual});
}

double negative_part_norm(const Eigen::VectorXd& eigenvalues) {
  double sum = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues(i) < 0.0) sum += eigenvalues(i) * eigenvalues(i);
  return std::sqrt(sum);
}

std::string first_violation(const VerifyReport& report) {
  if (report.violations.empty()) return "ok";
  const Violation& v = report.violations.front();
  return v.what + " (residual " + std::to_string(v.residual) + ")";
}

}  // namespace

VerifyReport verify_mnc_certificate(const MncCertificate& cert,
                                    const ContextualityScenario& scenario,
                                    const ProbabilisticModel& model, double tol) {
  VerifyReport report;
  const int n = scenario.vertex_count();
  if (cert.gamma.rows() != n || cert.gamma.cols() != n || model.p.size() != n) {
    report.violations.push_back({"size mismatch", 0.0});
    return report;
  }
  const Eigen::VectorXd& p = model.p;
  if (cert.model.size() == n)
    note(report, "embedded model differs from checked model",
         (cert.model - p).cwiseAbs().maxCoeff(), tol);
  else
    report.violations.push_back({"embedded model has wrong length", 0.0});

  note(report, "gamma is not symmetric",
       (cert.gamma - cert.gamma.transpose()).cwiseAbs().maxCoeff(), tol);
  for (int v = 0; v < n; ++v)
    note(report, "variance of vertex " + std::to_string(v),
         std::abs(cert.gamma(v, v) - (p(v) - p(v) * p(v))), tol);
  for (const auto& [u, v] : exclusive_pairs(scenario))
    note(report, "exclusive pair (" + std::to_string(u) + "," + std::to_string(v) + ")",
         std::abs(cert.gamma(u, v) + p(u) * p(v)), tol);
  for (int e = 0; e < scenario.edge_count(); ++e) {
    for (int v = 0; v < n; ++v) {
      double sum = 0.0;
      for (int u : scenario.edges[e]) sum += cert.gamma(u, v);
      note(report, "edge " + std::to_string(e) + " sum against vertex " + std::to_string(v),
           std::abs(sum), tol);
    }
  }
  const kernel::EighResult eig = kernel::eigh(0.5 * (cert.gamma + cert.gamma.transpose()));
  report.min_eigenvalue = eig.eigenvalues(0);
  if (report.min_eigenvalue < -tol)
    report.violations.push_back({"negative eigenvalue", -report.min_eigenvalue});
  report.ok = report.violations.empty();
  return report;
}

VerifyReport verify_q1_certificate(const Q1Certificate& cert,
                                   const ContextualityScenario& scenario,
                                   const ProbabilisticModel& model, double tol) {
  VerifyReport report;
  const int n = scenario.vertex_count();
  if (cert.m.rows() != n + 1 || cert.m.cols() != n + 1 || model.p.size() != n) {
    report.violations.push_back({"size mismatch", 0.0});
    return report;
  }
  const Eigen::VectorXd& p = model.p;
  if (cert.model.size() == n)
    note(report, "embedded model differs from checked model",
         (cert.model - p).cwiseAbs().maxCoeff(), tol);
  else
    report.violations.push_back({"embedded model has wrong length", 0.0});

  note(report, "M is not symmetric",
       (cert.m - cert.m.transpose()).cwiseAbs().maxCoeff(), tol);
  note(report, "special entry M[0][0]", std::abs(cert.m(0, 0) - 1.0), tol);
  for (int v = 0; v < n; ++v) {
    note(report, "border entry for vertex " + std::to_string(v),
         std::abs(cert.m(0, v + 1) - p(v)), tol);
    note(report, "diagonal entry for vertex " + std::to_string(v),
         std::abs(cert.m(v + 1, v + 1) - p(v)), tol);
  }
  for (const auto& [u, v] : exclusive_pairs(scenario))
    note(report, "exclusive pair (" + std::to_string(u) + "," + std::to_string(v) + ")",
         std::abs(cert.m(u + 1, v + 1)), tol);
  for (int e = 0; e < scenario.edge_count(); ++e) {
    for (int v = 0; v <= n; ++v) {
      double sum = 0.0;
      for (int u : scenario.edges[e]) sum += cert.m(u + 1, v);
      const double target = (v == 0) ? 1.0 : p(v - 1);
      note(report,
           "edge " + std::to_string(e) + " sum against column " + std::to_string(v),
           std::abs(sum - target), tol);
    }
  }
  const kernel::EighResult eig = kernel::eigh(0.5 * (cert.m + cert.m.transpose()));
  report.min_eigenvalue = eig.eigenvalues(0);
  if (report.min_eigenvalue < -tol)
    report.violations.push_back({"negative eigenvalue", -report.min_eigenvalue});
  report.ok = report.violations.empty();
  return report;
}

MncCertificate q1_to_mnc(const Q1Certificate& cert,
                         const ContextualityScenario& scenario, double tol) {
  ProbabilisticModel model{cert.model};
  const VerifyReport check = verify_q1_certificate(cert, scenario, model, tol);
  if (!check.ok)
    throw std::invalid_argument("q1_to_mnc: input certificate fails verification: " +
                                first_violation(check));
  const int n = scenario.vertex_count();
  MncCertificate out;
  out.model = cert.model;
  out.gamma = cert.m.bottomRightCorner(n, n) -
              cert.m.row(0).tail(n).transpose() * cert.m.row(0).tail(n);
  return out;
}

Q1Certificate mnc_to_q1(const MncCertificate& cert,
                        const ContextualityScenario& scenario, double tol) {
  ProbabilisticModel model{cert.model};
  const VerifyReport check = verify_mnc_certificate(cert, scenario, model, tol);
  if (!check.ok)
    throw std::invalid_argument("mnc_to_q1: input certificate fails verification: " +
                                first_violation(check));
  const int n = scenario.vertex_count();
  Q1Certificate out;
  out.model = cert.model;
  out.m = Eigen::MatrixXd(n + 1, n + 1);
  out.m(0, 0) = 1.0;
  out.m.row(0).tail(n) = cert.model.transpose();
  out.m.col(0).tail(n) = cert.model;
  out.m.bottomRightCorner(n, n) = cert.gamma + cert.model * cert.model.transpose();
  return out;
}

namespace {

struct ActiveSet {
  std::vector<int> vertices;  // active vertex ids, ascending
  std::vector<int> position;  // vertex id -> active index or -1
};

ActiveSet active_vertices(const Eigen::VectorXd& p) {
  ActiveSet active;
  active.position.assign(p.size(), -1);
  for (int v = 0; v < p.size(); ++v) {
    if (p(v) > kDeterministicTol && p(v) < 1.0 - kDeterministicTol) {
      active.position[v] = static_cast<int>(active.vertices.size());
      active.vertices.push_back(v);
    }
  }
  return active;
}

bool exclusivity_complete(const ContextualityScenario& scenario,
                          const ActiveSet& active) {
  const int k = static_cast<int>(active.vertices.size());
  std::vector<std::vector<bool>> seen(k, std::vector<bool>(k, false));
  for (const auto& [u, v] : exclusive_pairs(scenario)) {
    const int i = active.position[u];
    const int j = active.position[v];
    if (i >= 0 && j >= 0) seen[i][j] = seen[j][i] = true;
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (!seen[i][j]) return false;
  return true;
}

Eigen::MatrixXd embed_active(const Eigen::MatrixXd& reduced, const ActiveSet& active,
                             int n) {
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
  const int k = static_cast<int>(active.vertices.size());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      full(active.vertices[i], active.vertices[j]) = reduced(i, j);
  return full;
}

kernel::AffineConstraintSet mnc_constraints(const ContextualityScenario& scenario,
                                            const Eigen::VectorXd& p,
                                            const ActiveSet& active) {
  const int k = static_cast<int>(active.vertices.size());
  kernel::AffineConstraintSet constraints(k);
  for (int i = 0; i < k; ++i) {
    const double pv = p(active.vertices[i]);
    constraints.add_entry(i, i, pv - pv * pv);
  }
  for (const auto& [u, v] : exclusive_pairs(scenario)) {
    const int i = active.position[u];
    const int j = active.position[v];
    if (i >= 0 && j >= 0) constraints.add_entry(i, j, -p(u) * p(v));
  }
  for (const auto& edge : scenario.edges) {
    std::vector<int> rows;
    for (int u : edge)
      if (active.position[u] >= 0) rows.push_back(active.position[u]);
    if (rows.empty()) continue;
    for (int col = 0; col < k; ++col) constraints.add_row_sum(rows, col, 0.0);
  }
  constraints.finalize();
  return constraints;
}

kernel::AffineConstraintSet q1_constraints(const ContextualityScenario& scenario,
                                           const Eigen::VectorXd& p) {
  const int n = scenario.vertex_count();
  kernel::AffineConstraintSet constraints(n + 1);
  constraints.add_entry(0, 0, 1.0);
  for (int v = 0; v < n; ++v) {
    constraints.add_entry(0, v + 1, p(v));
    constraints.add_entry(v + 1, v + 1, p(v));
  }
  for (const auto& [u, v] : exclusive_pairs(scenario))
    constraints.add_entry(u + 1, v + 1, 0.0);
  for (const auto& edge : scenario.edges) {
    std::vector<int> rows;
    for (int u : edge) rows.push_back(u + 1);
    for (int col = 0; col <= n; ++col)
      constraints.add_row_sum(rows, col, (col == 0) ? 1.0 : p(col - 1));
  }
  constraints.finalize();
  return constraints;
}

// Classifies a matrix pinned entirely by the affine constraints.
void classify_determined(FeasibilityVerdict& verdict, const Eigen::MatrixXd& pinned,
                         double tol) {
  const kernel::EighResult eig = kernel::eigh(0.5 * (pinned + pinned.transpose()));
  verdict.fully_determined = true;
  verdict.determined_eigenvalues = eig.eigenvalues;
  verdict.min_eigenvalue = eig.eigenvalues(0);
  verdict.gap = negative_part_norm(eig.eigenvalues);
  verdict.status = (verdict.min_eigenvalue >= -tol) ? kernel::SolveStatus::feasible
                                                    : kernel::SolveStatus::infeasible;
}

}  // namespace

FeasibilityVerdict mnc_check(const ContextualityScenario& scenario,
                             const ProbabilisticModel& model,
                             const CheckOptions& options) {
  const ValidationReport valid = validate_model(scenario, model, kModelTolLoose);
  if (!valid.ok)
    throw std::invalid_argument("mnc_check: model fails validation: " +
                                valid.violations.front());
  const int n = scenario.vertex_count();
  FeasibilityVerdict verdict;

  for (const MncCertificate& candidate : options.mnc_candidates) {
    const VerifyReport check =
        verify_mnc_certificate(candidate, scenario, model, options.tol);
    if (check.ok) {
      verdict.status = kernel::SolveStatus::feasible;
      verdict.from_candidate = true;
      verdict.min_eigenvalue = check.min_eigenvalue;
      verdict.mnc = candidate;
      verdict.detail = "candidate certificate verified";
      return verdict;
    }
  }

  const ActiveSet active = active_vertices(model.p);
  const int k = static_cast<int>(active.vertices.size());

  if (k == 0) {
    MncCertificate cert{Eigen::MatrixXd::Zero(n, n), model.p};
    const VerifyReport check = verify_mnc_certificate(cert, scenario, model, options.tol);
    verdict.status = check.ok ? kernel::SolveStatus::feasible
                              : kernel::SolveStatus::inconclusive;
    verdict.detail = "deterministic model, zero covariance";
    if (check.ok) verdict.mnc = std::move(cert);
    return verdict;
  }

  if (exclusivity_complete(scenario, active)) {
    Eigen::MatrixXd pinned(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const double pi = model.p(active.vertices[i]);
        const double pj = model.p(active.vertices[j]);
        pinned(i, j) = (i == j) ? pi - pi * pi : -pi * pj;
      }
    }
    classify_determined(verdict, pinned, options.tol);
    verdict.detail = "exclusivity fixes every entry";
    if (verdict.status == kernel::SolveStatus::feasible) {
      MncCertificate cert{embed_active(pinned, active, n), model.p};
      const VerifyReport check =
          verify_mnc_certificate(cert, scenario, model, options.tol);
      if (!check.ok) {
        verdict.status = kernel::SolveStatus::inconclusive;
        verdict.detail += "; pinned matrix failed verification: " + first_violation(check);
      } else {
        verdict.mnc = std::move(cert);
      }
    }
    return verdict;
  }

  const kernel::AffineConstraintSet constraints =
      mnc_constraints(scenario, model.p, active);
  if (constraints.structurally_infeasible()) {
    verdict.status = kernel::SolveStatus::infeasible;
    verdict.structural = true;
    verdict.gap = constraints.inconsistency();
    verdict.detail = "affine constraints are mutually inconsistent";
    return verdict;
  }
  if (constraints.fully_determined()) {
    classify_determined(verdict, constraints.determined_point(), options.tol);
    verdict.detail = "affine constraints pin every entry";
    if (verdict.status == kernel::SolveStatus::feasible) {
      MncCertificate cert{embed_active(constraints.determined_point(), active, n),
                          model.p};
      const VerifyReport check =
          verify_mnc_certificate(cert, scenario, model, options.tol);
      if (!check.ok) {
        verdict.status = kernel::SolveStatus::inconclusive;
        verdict.detail += "; pinned matrix failed verification: " + first_violation(check);
      } else {
        verdict.mnc = std::move(cert);
      }
    }
    return verdict;
  }

  kernel::FeasibilityResult result = kernel::sdp_feasibility(constraints, options.solve);
  verdict.status = result.status;
  verdict.gap = result.distance;
  verdict.iterations = result.iterations;
  verdict.log = std::move(result.log);
  if (result.iterate.size() > 0) {
    const kernel::EighResult eig =
        kernel::eigh(0.5 * (result.iterate + result.iterate.transpose()));
    verdict.min_eigenvalue = eig.eigenvalues(0);
  }
  if (k < n)
    verdict.detail = std::to_string(n - k) + " deterministic vertices eliminated";
  if (verdict.status == kernel::SolveStatus::feasible) {
    MncCertificate cert{embed_active(result.iterate, active, n), model.p};
    const VerifyReport check =
        verify_mnc_certificate(cert, scenario, model, options.tol);
    if (!check.ok) {
      verdict.status = kernel::SolveStatus::inconclusive;
      verdict.detail += "; solver iterate failed verification: " + first_violation(check);
    } else {
      verdict.mnc = std::move(cert);
    }
  }
  return verdict;
}

FeasibilityVerdict q1_check(const ContextualityScenario& scenario,
                            const ProbabilisticModel& model,
                            const CheckOptions& options) {
  const ValidationReport valid = validate_model(scenario, model, kModelTolLoose);
  if (!valid.ok)
    throw std::invalid_argument("q1_check: model fails validation: " +
                                valid.violations.front());
  FeasibilityVerdict verdict;

  for (const Q1Certificate& candidate : options.q1_candidates) {
    const VerifyReport check =
        verify_q1_certificate(candidate, scenario, model, options.tol);
    if (check.ok) {
      verdict.status = kernel::SolveStatus::feasible;
      verdict.from_candidate = true;
      verdict.min_eigenvalue = check.min_eigenvalue;
      verdict.q1 = candidate;
      verdict.detail = "candidate certificate verified";
      return verdict;
    }
  }

  if (options.q1_route == Q1Route::gamma) {
    CheckOptions inner = options;
    inner.q1_candidates.clear();
    verdict = mnc_check(scenario, model, inner);
    verdict.detail += verdict.detail.empty() ? "gamma route" : "; gamma route";
    if (verdict.status == kernel::SolveStatus::feasible && verdict.mnc) {
      verdict.q1 = mnc_to_q1(*verdict.mnc, scenario, options.tol);
    }
    return verdict;
  }

  const kernel::AffineConstraintSet constraints = q1_constraints(scenario, model.p);
  if (constraints.structurally_infeasible()) {
    verdict.status = kernel::SolveStatus::infeasible;
    verdict.structural = true;
    verdict.gap = constraints.inconsistency();
    verdict.detail = "affine constraints are mutually inconsistent";
    return verdict;
  }
  if (constraints.fully_determined()) {
    classify_determined(verdict, constraints.determined_point(), options.tol);
    verdict.detail = "affine constraints pin every entry";
    if (verdict.status == kernel::SolveStatus::feasible) {
      Q1Certificate cert{constraints.determined_point(), model.p};
      const VerifyReport check =
          verify_q1_certificate(cert, scenario, model, options.tol);
      if (!check.ok) {
        verdict.status = kernel::SolveStatus::inconclusive;
        verdict.detail += "; pinned matrix failed verification: " + first_violation(check);
      } else {
        verdict.q1 = std::move(cert);
      }
    }
    return verdict;
  }

  kernel::FeasibilityResult result = kernel::sdp_feasibility(constraints, options.solve);
  verdict.status = result.status;
  verdict.gap = result.distance;
  verdict.iterations = result.iterations;
  verdict.log = std::move(result.log);
  verdict.detail = "native M-space route";
  if (result.iterate.size() > 0) {
    const kernel::EighResult eig =
        kernel::eigh(0.5 * (result.iterate + result.iterate.transpose()));
    verdict.min_eigenvalue = eig.eigenvalues(0);
  }
  if (verdict.status == kernel::SolveStatus::feasible) {
    Q1Certificate cert{0.5 * (result.iterate + result.iterate.transpose()), model.p};
    const VerifyReport check =
        verify_q1_certificate(cert, scenario, model, options.tol);
    if (!check.ok) {
      verdict.status = kernel::SolveStatus::inconclusive;
      verdict.detail += "; solver iterate failed verification: " + first_violation(check);
    } else {
      verdict.q1 = std::move(cert);
    }
  }
  return verdict;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m, const Eigen::VectorXd& model,
                           const char* kind) {
  nlohmann::json j;
  j["kind"] = kind;
  j["size"] = static_cast<int>(m.rows());
  std::vector<double> flat;
  flat.reserve(m.size());
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k) flat.push_back(m(i, k));
  j["matrix"] = flat;
  j["model"] = std::vector<double>(model.data(), model.data() + model.size());
  return j;
}

Eigen::MatrixXd matrix_from_flat(const std::vector<double>& flat, int size) {
  if (static_cast<int>(flat.size()) != size * size)
    throw std::invalid_argument("certificate json: matrix length does not match size");
  Eigen::MatrixXd m(size, size);
  for (int i = 0; i < size; ++i)
    for (int k = 0; k < size; ++k) m(i, k) = flat[i * size + k];
  return m;
}

}  // namespace

std::string certificate_to_json(const Q1Certificate& cert) {
  return matrix_json(cert.m, cert.model, "q1").dump(2);
}

std::string certificate_to_json(const MncCertificate& cert) {
  return matrix_json(cert.gamma, cert.model, "mnc").dump(2);
}

ParsedCertificate certificate_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  for (const char* key : {"kind", "size", "matrix", "model"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("certificate json: missing '") + key + "'");
  const std::string kind = j["kind"].get<std::string>();
  const int size = j["size"].get<int>();
  const auto flat = j["matrix"].get<std::vector<double>>();
  const auto model_values = j["model"].get<std::vector<double>>();
  Eigen::VectorXd model =
      Eigen::Map<const Eigen::VectorXd>(model_values.data(), model_values.size());
  ParsedCertificate out;
  if (kind == "q1") {
    out.q1 = Q1Certificate{matrix_from_flat(flat, size), std::move(model)};
  } else if (kind == "mnc") {
    out.mnc = MncCertificate{matrix_from_flat(flat, size), std::move(model)};
  } else {
    throw std::invalid_argument("certificate json: unknown kind '" + kind + "'");
  }
  return out;
}

}  // namespace ctx::certificates
