#pragma once

#include "ctx/hypergraph.hpp"
#include "ctx/kernel.hpp"

#include <optional>
#include <string>
#include <vector>

// Membership certificates for a probabilistic model.
//
// A Q1 certificate is a PSD matrix M of size (|V|+1)^2 whose row/column 0
// carries the model: M[0][0] = 1, M[0][v] = M[v][v] = p(v), M[u][v] = 0 for
// distinct u, v sharing an edge, and sum_{u in e} M[u][v] = M[0][v] for
// every edge e and vertex v.
//
// An MNC certificate is a PSD matrix gamma of size |V|^2 acting as the
// covariance of macroscopic fluctuations: gamma[v][v] = p(v) - p(v)^2,
// gamma[u][v] = -p(u) p(v) for distinct u, v sharing an edge, and
// sum_{u in e} gamma[u][v] = 0 for every edge and vertex.
//
// The two are equivalent by a Schur complement in the special entry:
// gamma[u][v] = M[u][v] - p(u) p(v).
namespace ctx::certificates {

struct Q1Certificate {
  Eigen::MatrixXd m;       // (n+1) x (n+1), index 0 is the special column
  Eigen::VectorXd model;   // the certified p
};

struct MncCertificate {
  Eigen::MatrixXd gamma;   // n x n
  Eigen::VectorXd model;
};

// Certificates produced by the iterative solver are accepted at this
// tolerance; analytically constructed ones should pass at 1e-12.
inline constexpr double kVerifyTol = 1e-7;
inline constexpr double kVerifyTolAnalytic = 1e-12;

struct Violation {
  std::string what;
  double residual = 0.0;
};

struct VerifyReport {
  bool ok = false;
  double min_eigenvalue = 0.0;
  double max_affine_residual = 0.0;
  std::vector<Violation> violations;
};

VerifyReport verify_q1_certificate(const Q1Certificate& cert,
                                   const ContextualityScenario& scenario,
                                   const ProbabilisticModel& model,
                                   double tol = kVerifyTol);
VerifyReport verify_mnc_certificate(const MncCertificate& cert,
                                    const ContextualityScenario& scenario,
                                    const ProbabilisticModel& model,
                                    double tol = kVerifyTol);

// Schur-complement bridge.  Both directions verify their input first and
// throw std::invalid_argument when it fails; the round trip is the identity
// to 1e-12.
MncCertificate q1_to_mnc(const Q1Certificate& cert,
                         const ContextualityScenario& scenario,
                         double tol = kVerifyTol);
Q1Certificate mnc_to_q1(const MncCertificate& cert,
                        const ContextualityScenario& scenario,
                        double tol = kVerifyTol);

// Route for q1_check: solve in gamma space and translate the certificate
// (default; fewer coupled constraints), or solve the bordered M-space
// problem directly (kept as an independent cross-check).
enum class Q1Route { gamma, native };

struct CheckOptions {
  kernel::SolveOptions solve;
  double tol = kVerifyTol;  // certificate acceptance tolerance
  Q1Route q1_route = Q1Route::gamma;
  // Candidate certificates (e.g. built from a classical decomposition or a
  // quantum realization) verified before any solver runs; the first one
  // that passes settles feasibility.
  std::vector<Q1Certificate> q1_candidates;
  std::vector<MncCertificate> mnc_candidates;
};

struct FeasibilityVerdict {
  kernel::SolveStatus status = kernel::SolveStatus::inconclusive;
  double gap = 0.0;          // Frobenius distance between affine set and cone
  double min_eigenvalue = 0.0;
  long iterations = 0;
  bool structural = false;   // affine constraints alone are inconsistent
  bool from_candidate = false;
  bool fully_determined = false;
  std::string detail;
  std::optional<Q1Certificate> q1;
  std::optional<MncCertificate> mnc;
  Eigen::VectorXd determined_eigenvalues;  // when the affine set pinned gamma/M
  std::vector<double> log;   // solver inter-set distance per iteration
};

// Is p in the macroscopically non-contextual set?  Feasible verdicts carry a
// certificate that passes verify_mnc_certificate; infeasibility is only
// claimed from a plateaued solver gap (or a fully determined/inconsistent
// affine set), never from budget exhaustion.
FeasibilityVerdict mnc_check(const ContextualityScenario& scenario,
                             const ProbabilisticModel& model,
                             const CheckOptions& options = {});

// Is p in Q1?  Equivalent to mnc_check by the Schur bridge; the default
// route solves in gamma space and translates the certificate.
FeasibilityVerdict q1_check(const ContextualityScenario& scenario,
                            const ProbabilisticModel& model,
                            const CheckOptions& options = {});

// Interchange format:
//   {"kind": "q1"|"mnc", "size": int, "matrix": [row-major floats],
//    "model": [floats]}
std::string certificate_to_json(const Q1Certificate& cert);
std::string certificate_to_json(const MncCertificate& cert);
struct ParsedCertificate {
  std::optional<Q1Certificate> q1;
  std::optional<MncCertificate> mnc;
};
ParsedCertificate certificate_from_json(const std::string& text);

}  // namespace ctx::certificates
