#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctx/certificates.hpp"
#include "ctx/hypergraph.hpp"

// Macroscopic extension of a microscopic experiment: each run sends N
// independent copies of the system through one complete measurement and only
// the outcome counts are recorded.  The rescaled count fluctuations
// I(v) = (c(v) - N p(v)) / sqrt(N) converge to a centered Gaussian whose
// covariance within an edge is delta_{uv} p(v) - p(u) p(v).  A feasibility
// certificate gamma extends those per-edge covariances to a single global
// Gaussian, which this module can sample to demonstrate that one joint
// distribution reproduces every edge's macroscopic statistics.
namespace ctx::macro {

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct MacroRunConfig {
  long particles = 10000;  // N: copies per run
  long runs = 100000;      // S: independent runs of the edge
  std::uint64_t seed = 0;
  long batch = 1024;  // runs per RNG substream; fixed granularity keeps
                      // results independent of any future parallel split
  double scaling_exponent = 0.5;  // fluctuations divide by N^alpha; a
                                  // diagnostic knob — the limit covariance
                                  // below is the alpha = 1/2 one, other
                                  // values make fluctuations vanish or blow up
};

struct MacroSampleReport {
  int edge = -1;
  std::vector<int> vertices;     // vertex ids of the edge, in edge order
  Eigen::VectorXd probabilities; // model restricted to the edge
  long particles = 0;
  long runs = 0;
  std::uint64_t seed = 0;
  CountMatrix counts;          // runs x outcomes, raw counts per run
  Eigen::MatrixXd fluctuations;  // runs x outcomes, (c - N p) / sqrt(N)
  Eigen::VectorXd mean;          // empirical mean fluctuation per outcome
  Eigen::MatrixXd covariance;    // empirical covariance (1/(S-1) normalized)
  Eigen::VectorXd skewness;        // standardized third moment per outcome
  Eigen::VectorXd excess_kurtosis; // standardized fourth moment minus 3
  bool counts_conserved = false;   // every run's counts summed exactly to N
};

// Runs cfg.runs independent multinomial(N, p|_e) experiments.  Counts are
// checked to sum to N exactly in every run (integer arithmetic); the report
// is bit-identical for identical seeds.
MacroSampleReport simulate_edge(const ContextualityScenario& scenario,
                                const ProbabilisticModel& model, int edge,
                                const MacroRunConfig& cfg);

// Limit covariance of the fluctuations within one edge:
// delta_{uv} p(v) - p(u) p(v).  PSD with zero row sums for normalized p|_e.
Eigen::MatrixXd theoretical_covariance(const ContextualityScenario& scenario,
                                       const ProbabilisticModel& model, int edge);

struct CovarianceComparison {
  Eigen::MatrixXd deviation;  // empirical minus theory
  Eigen::MatrixXd z;          // deviation / asymptotic std of the estimator
  double max_abs_deviation = 0.0;
  double max_abs_z = 0.0;
  double z_threshold = 5.0;
  bool pass = false;
};

// Entrywise comparison of the report's empirical covariance against a theory
// matrix.  The z-scores use the asymptotic variance of a sample covariance,
// (g_uu g_vv + g_uv^2) / S.  Requires S >= 100.
CovarianceComparison covariance_compare(const MacroSampleReport& report,
                                        const Eigen::MatrixXd& theory,
                                        double z_threshold = 5.0);

struct GaussianityReport {
  Eigen::VectorXd skewness;              // empirical, per outcome
  Eigen::VectorXd excess_kurtosis;       // empirical, per outcome
  Eigen::VectorXd theoretical_skewness;  // (1 - 2p) / sqrt(N p (1-p))
  std::vector<bool> skipped;             // degenerate (zero-variance) outcomes
  std::vector<std::string> notices;
  double skew_threshold = 0.05;
  bool pass = false;  // all non-skipped |skewness| < threshold
};

// Normality diagnostics for the per-outcome marginals.  Requires S >= 1000.
GaussianityReport gaussianity_check(const MacroSampleReport& report,
                                    double skew_threshold = 0.05);

// A global zero-mean Gaussian over all vertices with covariance gamma taken
// from a verified feasibility certificate.  `factor` satisfies
// factor * factor^T = gamma up to the clipping of eigenvalues in [-tol, 0).
struct GaussianWitness {
  certificates::MncCertificate certificate;
  Eigen::MatrixXd factor;
};

// Verifies the certificate (throws std::invalid_argument on failure, quoting
// the first violation) and prepares the sampling factor via an
// eigendecomposition square root.
GaussianWitness make_gaussian_witness(const certificates::MncCertificate& certificate,
                                      const ContextualityScenario& scenario,
                                      double tol = certificates::kVerifyTol);

struct WitnessEdgeComparison {
  int edge = -1;
  Eigen::MatrixXd empirical;
  Eigen::MatrixXd theory;  // gamma restricted to the edge
  double max_abs_deviation = 0.0;
};

struct WitnessSampleReport {
  long runs = 0;
  std::uint64_t seed = 0;
  std::vector<WitnessEdgeComparison> edges;
  double max_abs_deviation = 0.0;
};

// Draws S samples of the global Gaussian and compares, for every edge, the
// empirical covariance of the restricted coordinates against gamma restricted
// to that edge: the constructive demonstration that a single joint
// distribution reproduces every edge's macroscopic statistics.
WitnessSampleReport sample_global_gaussian(const GaussianWitness& witness,
                                           const ContextualityScenario& scenario,
                                           long runs, std::uint64_t seed);

std::string macro_report_to_json(const MacroSampleReport& report);
std::string witness_report_to_json(const WitnessSampleReport& report);

}  // namespace ctx::macro
