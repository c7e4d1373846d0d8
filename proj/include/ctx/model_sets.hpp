#pragma once

#include "ctx/builders.hpp"
#include "ctx/certificates.hpp"
#include "ctx/hypergraph.hpp"

#include <complex>
#include <optional>
#include <vector>

// The nested model sets on a contextuality scenario: deterministic models
// (one event per edge), their convex hull (classical models, decided by LP),
// and quantum models (a state and projective measurements reproducing p).
namespace ctx {

struct DeterministicModel {
  std::vector<int> selected;  // sorted vertex ids, exactly one per edge
};

ProbabilisticModel indicator_model(const DeterministicModel& model, int vertex_count);

// All deterministic models by backtracking over the most constrained edge
// first.  Throws std::length_error when the search exceeds node_budget
// partial assignments.
std::vector<DeterministicModel> enumerate_deterministic(
    const ContextualityScenario& scenario, long node_budget = 1000000);

struct ClassicalDecomposition {
  std::vector<DeterministicModel> support;
  Eigen::VectorXd weights;  // nonnegative, sums to 1
};

// Mixture evaluated back to a model; reproduces the target within 1e-7
// whenever classical_check reported success.
ProbabilisticModel evaluate_decomposition(const ClassicalDecomposition& decomposition,
                                          int vertex_count);

struct ClassicalCheckResult {
  bool classical = false;
  // No deterministic models exist, so the classical set is empty.
  bool vacuous = false;
  double margin = 0.0;  // minimal total violation of the mixture equations
  long lp_pivots = 0;
  std::optional<ClassicalDecomposition> decomposition;
};

ClassicalCheckResult classical_check(const ContextualityScenario& scenario,
                                     const ProbabilisticModel& model,
                                     long node_budget = 1000000);

// Rank-one mixture sum_l q_l w_l w_l^T with w_l = (1, indicator of model l);
// passes verify_q1_certificate at 1e-10 by construction.
certificates::Q1Certificate classical_to_q1_certificate(
    const ClassicalDecomposition& decomposition,
    const ContextualityScenario& scenario);

struct QuantumRealization {
  int dim = 0;
  Eigen::MatrixXcd rho;                     // density operator
  std::vector<Eigen::MatrixXcd> projectors; // one per vertex id
};

struct QuantumEvalResult {
  ProbabilisticModel model;
  double max_edge_residual = 0.0;       // worst || sum_{v in e} P_v - I ||
  double max_projector_residual = 0.0;  // worst Hermiticity/idempotence slip
  double normalization_residual = 0.0;  // worst |sum_e p - 1|
};

// Checks rho (Hermitian, unit trace, PSD at 1e-12), the projectors
// (Hermitian, idempotent, each edge resolving the identity at 1e-10), and
// evaluates p(v) = tr(rho P_v); dimensions above 64 are refused.
QuantumEvalResult quantum_evaluate(const QuantumRealization& realization,
                                   const ContextualityScenario& scenario);

// Gram-matrix certificate M[u][v] = Re tr(rho P_u P_v) (border row: identity),
// PSD by construction for any valid realization.
certificates::Q1Certificate quantum_to_q1_certificate(
    const QuantumRealization& realization, const ContextualityScenario& scenario);

// Two-qubit realization on B(2,2,2) attaining CHSH = 2*sqrt(2): maximally
// entangled state, first party measuring at angles 0 and pi/2, second party
// at +-pi/4.
QuantumRealization tsirelson_realization();

// Same measurements on lambda*sqrt(2)-weighted mixture of the entangled
// state with maximal noise; reproduces isotropic(lambda) exactly.
// Requires 0 <= lambda <= 1/sqrt(2).
QuantumRealization noisy_tsirelson_realization(double lambda);

// Reference correlation tables on B(2,2,2).
CorrelationTable pr_box();
CorrelationTable uniform_box();
// lambda * PR + (1 - lambda) * uniform; CHSH value 4*lambda.
CorrelationTable isotropic_box(double lambda);
CorrelationTable tsirelson_box();  // equals isotropic_box(1/sqrt(2))

// CHSH functional sum_{xy} (-1)^{xy} sum_{ab} (-1)^{a+b} p(ab|xy) on the
// B(2,2,2) hypergraph; throws when the scenario is not B(2,2,2).
double chsh_value(const ContextualityScenario& scenario,
                  const ProbabilisticModel& model);

// Realization interchange format: {"dim": int, "rho": [[re, im], ...]
// row-major, "projectors": {"<vertex id>": [[re, im], ...], ...}}.
std::string realization_to_json(const QuantumRealization& realization);
QuantumRealization realization_from_json(const std::string& text);

}  // namespace ctx
