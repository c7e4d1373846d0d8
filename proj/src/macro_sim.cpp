#include "ctx/macro_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctx/kernel.hpp"
#include "ctx/rng.hpp"
#include "json.hpp"

namespace ctx::macro {

namespace {

void require_edge(const ContextualityScenario& scenario, int edge) {
  if (edge < 0 || edge >= scenario.edge_count())
    throw std::invalid_argument("edge index " + std::to_string(edge) +
                                " out of range");
}

}  // namespace

MacroSampleReport simulate_edge(const ContextualityScenario& scenario,
                                const ProbabilisticModel& model, int edge,
                                const MacroRunConfig& cfg) {
  require_edge(scenario, edge);
  if (cfg.particles < 1) throw std::invalid_argument("simulate_edge: N must be >= 1");
  if (cfg.runs < 2) throw std::invalid_argument("simulate_edge: S must be >= 2");
  if (cfg.batch < 1) throw std::invalid_argument("simulate_edge: batch must be >= 1");
  if (!(cfg.scaling_exponent > 0.0) || !std::isfinite(cfg.scaling_exponent))
    throw std::invalid_argument("simulate_edge: scaling exponent must be positive");
  const ValidationReport valid = validate_model(scenario, model, kModelTolLoose);
  if (!valid.ok)
    throw std::invalid_argument("simulate_edge: model fails validation: " +
                                valid.violations.front());

  const std::vector<int>& vertices = scenario.edges[edge];
  const int k = static_cast<int>(vertices.size());
  const long n = cfg.particles;
  const long s = cfg.runs;
  const double scale = std::pow(static_cast<double>(n), cfg.scaling_exponent);

  MacroSampleReport report;
  report.edge = edge;
  report.vertices = vertices;
  report.particles = n;
  report.runs = s;
  report.seed = cfg.seed;
  report.probabilities = Eigen::VectorXd(k);
  for (int i = 0; i < k; ++i) report.probabilities(i) = model.p(vertices[i]);

  std::vector<double> edge_p(report.probabilities.data(),
                             report.probabilities.data() + k);
  for (double& w : edge_p) w = std::max(0.0, w);

  report.counts.resize(s, k);
  report.fluctuations.resize(s, k);
  report.counts_conserved = true;

  // One RNG substream per batch of runs: results stay reproducible no matter
  // how a caller might ever split the loop.
  long run = 0;
  for (long batch = 0; run < s; ++batch) {
    rng::Stream stream(rng::substream_seed(cfg.seed, static_cast<std::uint64_t>(edge),
                                           static_cast<std::uint64_t>(batch)));
    const long batch_end = std::min(s, run + cfg.batch);
    for (; run < batch_end; ++run) {
      const std::vector<long> counts = stream.multinomial(n, edge_p);
      long total = 0;
      for (int i = 0; i < k; ++i) {
        report.counts(run, i) = counts[i];
        total += counts[i];
      }
      if (total != n) {
        report.counts_conserved = false;
        throw std::logic_error("simulate_edge: counts failed to sum to N");
      }
      for (int i = 0; i < k; ++i)
        report.fluctuations(run, i) =
            (static_cast<double>(counts[i]) -
             static_cast<double>(n) * report.probabilities(i)) /
            scale;
    }
  }

  report.mean = report.fluctuations.colwise().mean();
  Eigen::MatrixXd centered = report.fluctuations.rowwise() - report.mean.transpose();
  report.covariance =
      (centered.transpose() * centered) / static_cast<double>(s - 1);

  report.skewness = Eigen::VectorXd::Zero(k);
  report.excess_kurtosis = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd& col = centered.col(i);
    const double m2 = col.array().square().mean();
    if (m2 <= 0.0) continue;  // degenerate outcome, moments stay 0
    const double m3 = col.array().cube().mean();
    const double m4 = col.array().square().square().mean();
    report.skewness(i) = m3 / std::pow(m2, 1.5);
    report.excess_kurtosis(i) = m4 / (m2 * m2) - 3.0;
  }
  return report;
}

Eigen::MatrixXd theoretical_covariance(const ContextualityScenario& scenario,
                                       const ProbabilisticModel& model, int edge) {
  require_edge(scenario, edge);
  const std::vector<int>& vertices = scenario.edges[edge];
  const int k = static_cast<int>(vertices.size());
  Eigen::MatrixXd gamma(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double pi = model.p(vertices[i]);
      const double pj = model.p(vertices[j]);
      gamma(i, j) = (i == j ? pi : 0.0) - pi * pj;
    }
  return gamma;
}

CovarianceComparison covariance_compare(const MacroSampleReport& report,
                                        const Eigen::MatrixXd& theory,
                                        double z_threshold) {
  const int k = static_cast<int>(report.vertices.size());
  if (theory.rows() != k || theory.cols() != k)
    throw std::invalid_argument("covariance_compare: theory shape mismatch");
  if (report.runs < 100)
    throw std::invalid_argument("covariance_compare: need S >= 100 for z-scores");

  CovarianceComparison out;
  out.z_threshold = z_threshold;
  out.deviation = report.covariance - theory;
  out.z.resize(k, k);
  const double s = static_cast<double>(report.runs);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double var =
          (theory(i, i) * theory(j, j) + theory(i, j) * theory(i, j)) / s;
      const double dev = std::abs(out.deviation(i, j));
      if (var > 0.0)
        out.z(i, j) = out.deviation(i, j) / std::sqrt(var);
      else
        out.z(i, j) = dev == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
  out.max_abs_deviation = out.deviation.cwiseAbs().maxCoeff();
  out.max_abs_z = out.z.cwiseAbs().maxCoeff();
  out.pass = out.max_abs_z <= z_threshold;
  return out;
}

GaussianityReport gaussianity_check(const MacroSampleReport& report,
                                    double skew_threshold) {
  if (report.runs < 1000)
    throw std::invalid_argument("gaussianity_check: need S >= 1000");
  const int k = static_cast<int>(report.vertices.size());
  GaussianityReport out;
  out.skew_threshold = skew_threshold;
  out.skewness = report.skewness;
  out.excess_kurtosis = report.excess_kurtosis;
  out.theoretical_skewness = Eigen::VectorXd::Zero(k);
  out.skipped.assign(k, false);
  out.pass = true;
  for (int i = 0; i < k; ++i) {
    const double p = report.probabilities(i);
    const double variance = report.covariance(i, i);
    if (variance <= 0.0 || p <= 0.0 || p >= 1.0) {
      out.skipped[i] = true;
      out.notices.push_back("outcome " + std::to_string(report.vertices[i]) +
                            " has a degenerate marginal; skipped");
      continue;
    }
    out.theoretical_skewness(i) =
        (1.0 - 2.0 * p) /
        std::sqrt(static_cast<double>(report.particles) * p * (1.0 - p));
    if (std::abs(out.skewness(i)) >= skew_threshold) out.pass = false;
  }
  return out;
}

GaussianWitness make_gaussian_witness(const certificates::MncCertificate& certificate,
                                      const ContextualityScenario& scenario,
                                      double tol) {
  const certificates::VerifyReport report =
      certificates::verify_mnc_certificate(certificate, scenario,
                                           ProbabilisticModel{certificate.model}, tol);
  if (!report.ok)
    throw std::invalid_argument("gaussian witness: certificate fails verification: " +
                                report.violations.front().what);

  const kernel::EighResult eig = kernel::eigh(certificate.gamma);
  Eigen::VectorXd clipped = eig.eigenvalues.cwiseMax(0.0);
  GaussianWitness witness;
  witness.certificate = certificate;
  witness.factor =
      eig.eigenvectors * clipped.cwiseSqrt().asDiagonal();
  return witness;
}

WitnessSampleReport sample_global_gaussian(const GaussianWitness& witness,
                                           const ContextualityScenario& scenario,
                                           long runs, std::uint64_t seed) {
  const int n = scenario.vertex_count();
  if (witness.factor.rows() != n)
    throw std::invalid_argument("gaussian witness: size does not match scenario");
  if (runs < 2) throw std::invalid_argument("sample_global_gaussian: need S >= 2");

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(n, n);
  rng::Stream stream(rng::substream_seed(seed, 0x67617573ULL, 0));
  Eigen::VectorXd g(n);
  for (long r = 0; r < runs; ++r) {
    for (int i = 0; i < n; ++i) g(i) = stream.normal();
    const Eigen::VectorXd x = witness.factor * g;
    sum += x;
    sum_outer += x * x.transpose();
  }
  const double s = static_cast<double>(runs);
  const Eigen::VectorXd mean = sum / s;
  const Eigen::MatrixXd covariance =
      (sum_outer - s * mean * mean.transpose()) / (s - 1.0);

  WitnessSampleReport report;
  report.runs = runs;
  report.seed = seed;
  for (int e = 0; e < scenario.edge_count(); ++e) {
    const std::vector<int>& vertices = scenario.edges[e];
    const int k = static_cast<int>(vertices.size());
    WitnessEdgeComparison cmp;
    cmp.edge = e;
    cmp.empirical.resize(k, k);
    cmp.theory.resize(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        cmp.empirical(i, j) = covariance(vertices[i], vertices[j]);
        cmp.theory(i, j) = witness.certificate.gamma(vertices[i], vertices[j]);
      }
    cmp.max_abs_deviation = (cmp.empirical - cmp.theory).cwiseAbs().maxCoeff();
    report.max_abs_deviation = std::max(report.max_abs_deviation, cmp.max_abs_deviation);
    report.edges.push_back(std::move(cmp));
  }
  return report;
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

}  // namespace

std::string macro_report_to_json(const MacroSampleReport& report) {
  nlohmann::json j;
  j["edge"] = report.edge;
  j["vertices"] = report.vertices;
  j["probabilities"] = vector_json(report.probabilities);
  j["particles"] = report.particles;
  j["runs"] = report.runs;
  j["seed"] = report.seed;
  j["counts_conserved"] = report.counts_conserved;
  j["mean"] = vector_json(report.mean);
  j["covariance"] = matrix_json(report.covariance);
  j["skewness"] = vector_json(report.skewness);
  j["excess_kurtosis"] = vector_json(report.excess_kurtosis);
  if (report.runs <= 1000) {
    nlohmann::json counts = nlohmann::json::array();
    for (long r = 0; r < report.runs; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int i = 0; i < report.counts.cols(); ++i)
        row.push_back(report.counts(r, i));
      counts.push_back(row);
    }
    j["counts"] = counts;
  } else {
    j["counts_omitted"] = "raw counts omitted for runs > 1000";
  }
  return j.dump(2);
}

std::string witness_report_to_json(const WitnessSampleReport& report) {
  nlohmann::json j;
  j["runs"] = report.runs;
  j["seed"] = report.seed;
  j["max_abs_deviation"] = report.max_abs_deviation;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& cmp : report.edges) {
    nlohmann::json e;
    e["edge"] = cmp.edge;
    e["empirical"] = matrix_json(cmp.empirical);
    e["theory"] = matrix_json(cmp.theory);
    e["max_abs_deviation"] = cmp.max_abs_deviation;
    edges.push_back(e);
  }
  j["edges"] = edges;
  return j.dump(2);
}

}  // namespace ctx::macro
