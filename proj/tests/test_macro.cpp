#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctx/builders.hpp"
#include "ctx/macro_sim.hpp"
#include "ctx/model_sets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace ctx;
using namespace ctx::macro;

namespace {

ContextualityScenario single_edge(int d) {
  std::vector<std::string> labels;
  std::vector<int> edge;
  for (int v = 0; v < d; ++v) {
    labels.push_back("o" + std::to_string(v));
    edge.push_back(v);
  }
  return new_scenario(labels, {edge});
}

ProbabilisticModel vec(std::initializer_list<double> values) {
  ProbabilisticModel model;
  model.p.resize(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) model.p(i++) = v;
  return model;
}

}  // namespace

TEST_CASE("fair coin fluctuations match the binomial limit covariance") {
  const auto scenario = single_edge(2);
  const auto model = vec({0.5, 0.5});

  MacroRunConfig cfg;
  cfg.particles = 10000;
  cfg.runs = 100000;
  cfg.seed = 42;

  const auto report = simulate_edge(scenario, model, 0, cfg);
  CHECK(report.counts_conserved);
  CHECK(report.runs == 100000);
  CHECK(report.mean.cwiseAbs().maxCoeff() <= 0.02);

  Eigen::MatrixXd theory(2, 2);
  theory << 0.25, -0.25,
           -0.25, 0.25;
  CHECK((theoretical_covariance(scenario, model, 0) - theory).cwiseAbs().maxCoeff() == 0.0);

  const auto comparison = covariance_compare(report, theory);
  CHECK(comparison.max_abs_deviation <= 0.02);
  CHECK(comparison.max_abs_z < 5.0);
  CHECK(comparison.pass);

  // N is large, so the standardized third moment has essentially vanished.
  const auto gauss = gaussianity_check(report);
  CHECK(gauss.pass);
  CHECK(gauss.theoretical_skewness.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("deterministic models fluctuate exactly zero") {
  const auto scenario = single_edge(2);
  const auto model = vec({1.0, 0.0});

  MacroRunConfig cfg;
  cfg.particles = 500;
  cfg.runs = 2000;
  cfg.seed = 7;

  const auto report = simulate_edge(scenario, model, 0, cfg);
  CHECK(report.counts_conserved);
  CHECK(report.fluctuations.cwiseAbs().maxCoeff() == 0.0);
  CHECK(report.covariance.cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd theory = theoretical_covariance(scenario, model, 0);
  CHECK(theory.cwiseAbs().maxCoeff() == 0.0);

  const auto comparison = covariance_compare(report, theory);
  CHECK(comparison.max_abs_deviation == 0.0);
  CHECK(comparison.pass);

  // Both outcomes are degenerate; the check skips them and says which.
  const auto gauss = gaussianity_check(report);
  CHECK(gauss.pass);
  REQUIRE(gauss.skipped.size() == 2);
  CHECK(gauss.skipped[0]);
  CHECK(gauss.skipped[1]);
  CHECK_FALSE(gauss.notices.empty());
}

TEST_CASE("small-N binomial skew matches theory and fails the normality gate") {
  const auto scenario = single_edge(2);
  const auto model = vec({0.1, 0.9});

  MacroRunConfig cfg;
  cfg.particles = 100;
  cfg.runs = 100000;
  cfg.seed = 3;

  const auto report = simulate_edge(scenario, model, 0, cfg);
  const auto gauss = gaussianity_check(report);

  // (1 - 2p) / sqrt(N p (1-p)) = 0.8 / 3 for outcome 0.
  CHECK(std::abs(gauss.theoretical_skewness(0) - 0.8 / 3.0) <= 1e-12);
  CHECK(std::abs(gauss.skewness(0) - 0.8 / 3.0) <= 0.05);
  CHECK(std::abs(gauss.skewness(1) + 0.8 / 3.0) <= 0.05);
  CHECK_FALSE(gauss.pass);  // visibly non-Gaussian at this N, by design
}

TEST_CASE("covariance comparison rejects the wrong theory") {
  const auto scenario = single_edge(2);
  const auto model = vec({0.5, 0.5});

  MacroRunConfig cfg;
  cfg.particles = 10000;
  cfg.runs = 20000;
  cfg.seed = 11;

  const auto report = simulate_edge(scenario, model, 0, cfg);

  Eigen::MatrixXd wrong(2, 2);  // covariance of a 0.9/0.1 coin instead
  wrong << 0.09, -0.09,
          -0.09, 0.09;
  const auto comparison = covariance_compare(report, wrong);
  CHECK_FALSE(comparison.pass);
  CHECK(comparison.max_abs_z > 5.0);
  CHECK(comparison.max_abs_deviation > 0.1);
}

TEST_CASE("simulation guards reject bad configurations") {
  const auto scenario = single_edge(2);
  const auto model = vec({0.5, 0.5});

  MacroRunConfig cfg;
  cfg.particles = 100;
  cfg.runs = 2000;

  SUBCASE("particle and run counts must be positive") {
    cfg.particles = 0;
    CHECK_THROWS_AS((void)simulate_edge(scenario, model, 0, cfg), std::invalid_argument);
    cfg.particles = 100;
    cfg.runs = 1;
    CHECK_THROWS_AS((void)simulate_edge(scenario, model, 0, cfg), std::invalid_argument);
  }
  SUBCASE("edge index must exist") {
    CHECK_THROWS_AS((void)simulate_edge(scenario, model, 1, cfg), std::invalid_argument);
    CHECK_THROWS_AS((void)simulate_edge(scenario, model, -1, cfg), std::invalid_argument);
  }
  SUBCASE("scaling exponent must be positive and finite") {
    cfg.scaling_exponent = 0.0;
    CHECK_THROWS_AS((void)simulate_edge(scenario, model, 0, cfg), std::invalid_argument);
  }
  SUBCASE("comparisons demand enough runs") {
    cfg.runs = 5000;
    const auto report = simulate_edge(scenario, model, 0, cfg);
    auto starved = report;
    starved.runs = 99;
    CHECK_THROWS_AS((void)covariance_compare(starved, report.covariance),
                    std::invalid_argument);
    starved.runs = 999;
    CHECK_THROWS_AS((void)gaussianity_check(starved), std::invalid_argument);
  }
}

TEST_CASE("theoretical covariance has the multinomial structure") {
  const auto scenario = single_edge(3);
  const auto model = vec({0.2, 0.3, 0.5});

  const Eigen::MatrixXd theory = theoretical_covariance(scenario, model, 0);
  CHECK(std::abs(theory(0, 0) - 0.16) <= 1e-15);
  CHECK(std::abs(theory(1, 1) - 0.21) <= 1e-15);
  CHECK(std::abs(theory(2, 2) - 0.25) <= 1e-15);
  CHECK(std::abs(theory(0, 1) + 0.06) <= 1e-15);
  CHECK(std::abs(theory(0, 2) + 0.10) <= 1e-15);
  CHECK(std::abs(theory(1, 2) + 0.15) <= 1e-15);
  CHECK((theory - theory.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(theory.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-15);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(theory);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-15);
}

TEST_CASE("identical seeds reproduce reports bit-for-bit") {
  const auto scenario = bell_scenario(2, 2, 2);
  const auto model = model_from_correlations(isotropic_box(0.5), scenario);

  MacroRunConfig cfg;
  cfg.particles = 1000;
  cfg.runs = 800;
  cfg.seed = 123;

  const auto a = simulate_edge(scenario, model, 3, cfg);
  const auto b = simulate_edge(scenario, model, 3, cfg);
  CHECK(a.counts == b.counts);
  CHECK(macro_report_to_json(a) == macro_report_to_json(b));

  cfg.seed = 124;
  const auto c = simulate_edge(scenario, model, 3, cfg);
  CHECK(a.counts != c.counts);

  // Small reports embed the raw counts; big ones only say they are omitted.
  CHECK(macro_report_to_json(a).find("\"counts\"") != std::string::npos);
  cfg.seed = 123;
  cfg.runs = 1001;
  const auto big = simulate_edge(scenario, model, 3, cfg);
  CHECK(macro_report_to_json(big).find("counts_omitted") != std::string::npos);
}

TEST_CASE("witness sampling reproduces every edge of a certificate") {
  const auto scenario = single_edge(2);
  const auto model = vec({0.5, 0.5});

  const auto verdict = certificates::mnc_check(scenario, model);
  REQUIRE(verdict.status == kernel::SolveStatus::feasible);
  REQUIRE(verdict.mnc.has_value());

  const auto witness = make_gaussian_witness(*verdict.mnc, scenario);
  const Eigen::MatrixXd reconstructed = witness.factor * witness.factor.transpose();
  CHECK((reconstructed - verdict.mnc->gamma).cwiseAbs().maxCoeff() <= 1e-10);

  const auto report = sample_global_gaussian(witness, scenario, 20000, 99);
  REQUIRE(report.edges.size() == 1);
  CHECK(report.max_abs_deviation <= 0.02);
  CHECK((report.edges[0].theory - verdict.mnc->gamma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero covariance witnesses sample identically zero") {
  const auto scenario = single_edge(3);
  const auto model = vec({1.0, 0.0, 0.0});

  const auto verdict = certificates::mnc_check(scenario, model);
  REQUIRE(verdict.status == kernel::SolveStatus::feasible);
  const auto witness = make_gaussian_witness(*verdict.mnc, scenario);
  CHECK(witness.factor.cwiseAbs().maxCoeff() <= 1e-10);

  const auto report = sample_global_gaussian(witness, scenario, 500, 1);
  CHECK(report.max_abs_deviation <= 1e-12);
}

TEST_CASE("witnesses refuse certificates that do not verify") {
  const auto scenario = single_edge(2);

  certificates::MncCertificate broken;
  broken.model = vec({0.5, 0.5}).p;
  broken.gamma.resize(2, 2);
  broken.gamma << 0.25, 0.25,   // exclusive overlap must be -p(u)p(v)
                  0.25, 0.25;
  CHECK_THROWS_AS((void)make_gaussian_witness(broken, scenario), std::invalid_argument);
}

TEST_CASE("covariance error shrinks with more runs") {
  const auto scenario = single_edge(2);
  const auto model = vec({0.5, 0.5});
  const Eigen::MatrixXd theory = theoretical_covariance(scenario, model, 0);

  // Quadrupling S should halve the estimator error.  Averaging the deviation
  // over many seeds before taking the ratio tames the heavy tail of a single
  // per-seed ratio; the seeds are fixed, so the value is reproducible.
  double sum_small = 0.0;
  double sum_large = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    MacroRunConfig small;
    small.particles = 1000;
    small.runs = 4000;
    small.seed = seed;
    MacroRunConfig large = small;
    large.runs = 16000;
    large.seed = seed + 1000;  // independent draw, not a prefix

    sum_small +=
        covariance_compare(simulate_edge(scenario, model, 0, small), theory)
            .max_abs_deviation;
    sum_large +=
        covariance_compare(simulate_edge(scenario, model, 0, large), theory)
            .max_abs_deviation;
  }
  REQUIRE(sum_small > 0.0);
  const double ratio = sum_large / sum_small;
  CHECK(ratio > 0.3);
  CHECK(ratio < 0.75);
}

TEST_CASE("bell edges share pairwise covariance entries") {
  const auto scenario = bell_scenario(2, 2, 2);
  const auto model = model_from_correlations(tsirelson_box(), scenario);

  // The limit covariance of a pair depends only on the model, so any two
  // edges containing the same vertex pair must agree on that entry.
  for (int e1 = 0; e1 < scenario.edge_count(); ++e1) {
    const Eigen::MatrixXd t1 = theoretical_covariance(scenario, model, e1);
    for (int e2 = e1 + 1; e2 < scenario.edge_count(); ++e2) {
      const Eigen::MatrixXd t2 = theoretical_covariance(scenario, model, e2);
      for (size_t i = 0; i < scenario.edges[e1].size(); ++i)
        for (size_t j = 0; j < scenario.edges[e1].size(); ++j) {
          const int u = scenario.edges[e1][i];
          const int v = scenario.edges[e1][j];
          const auto& other = scenario.edges[e2];
          const auto iu = std::find(other.begin(), other.end(), u);
          const auto iv = std::find(other.begin(), other.end(), v);
          if (iu == other.end() || iv == other.end()) continue;
          const double a = t1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          const double b = t2(iu - other.begin(), iv - other.begin());
          CHECK(a == b);
        }
    }
  }
}
