// ctxtool: command-line front door for the contextuality toolkit.
//
// Subcommands: build, check, bisect, simulate, transform, info.
// Exit codes: 0 = member / success, 1 = non-member / statistical failure,
// 2 = inconclusive or error.  Every report echoes the resolved configuration.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctx/builders.hpp"
#include "ctx/certificates.hpp"
#include "ctx/hypergraph.hpp"
#include "ctx/kernel.hpp"
#include "ctx/macro_sim.hpp"
#include "ctx/model_sets.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitMember = 0;
constexpr int kExitNonMember = 1;
constexpr int kExitInconclusive = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Atomic write: temp file in the same directory, then rename over the target.
void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out.flush()) throw std::runtime_error("write to " + tmp + " failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

nlohmann::json report_header(const std::string& command, const nlohmann::json& config) {
  nlohmann::json j;
  j["tool"] = "ctxtool";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  return j;
}

void emit_report(const nlohmann::json& report, const std::string& out_path) {
  if (!out_path.empty()) write_file(out_path, report.dump(2) + "\n");
}

ctx::ContextualityScenario load_scenario(const std::string& path) {
  return ctx::scenario_from_json(read_file(path));
}

// A model file is either {"p": [...]} or a correlation table
// {"n","m","d","P"}; the latter requires a matching Bell scenario.
ctx::ProbabilisticModel load_model(const std::string& path,
                                   const ctx::ContextualityScenario& scenario) {
  const std::string text = read_file(path);
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.contains("P")) {
    const ctx::CorrelationTable table = ctx::correlations_from_json(text);
    return ctx::model_from_correlations(table, scenario);
  }
  return ctx::model_from_json(text);
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::map<int, int> edge_size_histogram(const ctx::ContextualityScenario& s) {
  std::map<int, int> histogram;
  for (const auto& e : s.edges) ++histogram[static_cast<int>(e.size())];
  return histogram;
}

void print_scenario_summary(const ctx::ContextualityScenario& s) {
  std::cout << "vertices: " << s.vertex_count() << "\n";
  std::cout << "edges: " << s.edge_count() << "\n";
  std::cout << "edge sizes:";
  for (const auto& [size, count] : edge_size_histogram(s))
    std::cout << " " << size << "x" << count;
  std::cout << "\n";
}

// ---------------------------------------------------------------------------
// check helpers

// If the model is an isotropic CHSH box with visibility <= 1/sqrt(2), a
// quantum realization reproduces it exactly and its moment matrix settles
// membership without running the solver.
std::optional<ctx::certificates::Q1Certificate> isotropic_quantum_candidate(
    const ctx::ContextualityScenario& scenario, const ctx::ProbabilisticModel& model) {
  if (!ctx::is_bell_scenario(scenario, 2, 2, 2)) return std::nullopt;
  const double lambda = ctx::chsh_value(scenario, model) / 4.0;
  if (lambda < -1e-9 || lambda > 1.0 + 1e-9) return std::nullopt;
  const double clipped = std::min(1.0, std::max(0.0, lambda));
  const ctx::ProbabilisticModel reference =
      ctx::model_from_correlations(ctx::isotropic_box(clipped), scenario);
  if ((reference.p - model.p).cwiseAbs().maxCoeff() > 1e-9) return std::nullopt;
  const double top = 1.0 / std::sqrt(2.0);
  if (clipped > top + 1e-9) return std::nullopt;
  const ctx::QuantumRealization realization =
      ctx::noisy_tsirelson_realization(std::min(clipped, top));
  return ctx::quantum_to_q1_certificate(realization, scenario);
}

// Cheap classical probe: when the deterministic enumeration is small, a
// classical decomposition yields a solver-free certificate.
std::optional<ctx::certificates::Q1Certificate> classical_candidate(
    const ctx::ContextualityScenario& scenario, const ctx::ProbabilisticModel& model) {
  if (scenario.vertex_count() > 32) return std::nullopt;
  try {
    const ctx::ClassicalCheckResult result =
        ctx::classical_check(scenario, model, 100000);
    if (!result.classical || !result.decomposition) return std::nullopt;
    return ctx::classical_to_q1_certificate(*result.decomposition, scenario);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void add_candidates(ctx::certificates::CheckOptions& options,
                    const ctx::ContextualityScenario& scenario,
                    const ctx::certificates::ParsedCertificate& parsed,
                    double tol) {
  if (parsed.q1) {
    options.q1_candidates.push_back(*parsed.q1);
    try {
      options.mnc_candidates.push_back(
          ctx::certificates::q1_to_mnc(*parsed.q1, scenario, tol));
    } catch (const std::exception&) {
      // hint does not verify in the other space; keep the original only
    }
  }
  if (parsed.mnc) {
    options.mnc_candidates.push_back(*parsed.mnc);
    try {
      options.q1_candidates.push_back(
          ctx::certificates::mnc_to_q1(*parsed.mnc, scenario, tol));
    } catch (const std::exception&) {
    }
  }
}

nlohmann::json verdict_json(const ctx::certificates::FeasibilityVerdict& verdict) {
  nlohmann::json j;
  j["status"] = ctx::kernel::to_string(verdict.status);
  j["gap"] = verdict.gap;
  j["min_eigenvalue"] = verdict.min_eigenvalue;
  j["iterations"] = verdict.iterations;
  j["structural"] = verdict.structural;
  j["from_candidate"] = verdict.from_candidate;
  j["fully_determined"] = verdict.fully_determined;
  j["detail"] = verdict.detail;
  if (verdict.fully_determined)
    j["determined_eigenvalues"] = vector_json(verdict.determined_eigenvalues);
  if (!verdict.log.empty()) {
    j["solver_log"] = {{"iterations", verdict.log.size()},
                       {"first_distance", verdict.log.front()},
                       {"final_distance", verdict.log.back()}};
  }
  return j;
}

int status_exit_code(ctx::kernel::SolveStatus status) {
  switch (status) {
    case ctx::kernel::SolveStatus::feasible: return kExitMember;
    case ctx::kernel::SolveStatus::infeasible: return kExitNonMember;
    case ctx::kernel::SolveStatus::inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

// ---------------------------------------------------------------------------
// subcommand implementations

struct BuildArgs {
  std::string kind;
  int parties = 2;
  int settings = 2;
  int outcomes = 2;
  std::string in_path;
  std::string out_path;
  long protocol_budget = 1000000;
};

int run_build(const BuildArgs& args) {
  ctx::ContextualityScenario scenario;
  if (args.kind == "bell") {
    scenario = ctx::bell_scenario(args.parties, args.settings, args.outcomes,
                                  args.protocol_budget);
  } else if (args.kind == "triangle") {
    scenario = ctx::new_scenario({"a", "b", "c"}, {{0, 1}, {1, 2}, {0, 2}});
  } else if (args.kind == "single-edge") {
    std::vector<std::string> labels;
    std::vector<int> edge;
    for (int v = 0; v < args.outcomes; ++v) {
      labels.push_back("o" + std::to_string(v));
      edge.push_back(v);
    }
    scenario = ctx::new_scenario(labels, {edge});
  } else if (args.kind == "marginal") {
    if (args.in_path.empty())
      throw std::runtime_error("build marginal requires --in <marginal.json>");
    const ctx::MarginalScenario x = ctx::marginal_from_json(read_file(args.in_path));
    scenario = ctx::marginal_to_hypergraph(x, args.protocol_budget);
  } else {
    throw std::runtime_error("unknown build kind: " + args.kind);
  }
  if (args.out_path.empty()) throw std::runtime_error("build requires --out");
  write_file(args.out_path, ctx::scenario_to_json(scenario) + "\n");
  print_scenario_summary(scenario);
  std::cout << "wrote " << args.out_path << "\n";
  return kExitMember;
}

struct CheckArgs {
  std::string set;
  std::string scenario_path;
  std::string model_path;
  std::string out_path;
  std::string hint_path;
  std::string route = "gamma";
  double tol = ctx::certificates::kVerifyTol;
  long budget = 50000;
  long node_budget = 1000000;
  bool no_auto_hint = false;
};

int run_check(const CheckArgs& args) {
  const ctx::ContextualityScenario scenario = load_scenario(args.scenario_path);
  const ctx::ProbabilisticModel model = load_model(args.model_path, scenario);

  nlohmann::json config{{"set", args.set},
                        {"scenario", args.scenario_path},
                        {"model", args.model_path},
                        {"tol", args.tol},
                        {"budget", args.budget},
                        {"route", args.route},
                        {"auto_hint", !args.no_auto_hint}};
  nlohmann::json report = report_header("check", config);

  if (args.set == "classical") {
    const ctx::ClassicalCheckResult result =
        ctx::classical_check(scenario, model, args.node_budget);
    report["classical"] = result.classical;
    report["vacuous"] = result.vacuous;
    report["margin"] = result.margin;
    report["lp_pivots"] = result.lp_pivots;
    if (result.decomposition) {
      nlohmann::json dec;
      dec["weights"] = std::vector<double>(
          result.decomposition->weights.data(),
          result.decomposition->weights.data() + result.decomposition->weights.size());
      nlohmann::json support = nlohmann::json::array();
      for (const auto& d : result.decomposition->support) support.push_back(d.selected);
      dec["support"] = support;
      report["decomposition"] = dec;
    }
    emit_report(report, args.out_path);
    if (result.vacuous)
      std::cout << "not classical (vacuously: no deterministic models)\n";
    else
      std::cout << (result.classical ? "classical" : "not classical")
                << " (margin " << result.margin << ")\n";
    return result.classical ? kExitMember : kExitNonMember;
  }

  ctx::certificates::CheckOptions options;
  options.tol = args.tol;
  options.solve.max_iterations = args.budget;
  options.q1_route = (args.route == "native")
                         ? ctx::certificates::Q1Route::native
                         : ctx::certificates::Q1Route::gamma;
  if (!args.hint_path.empty()) {
    const ctx::certificates::ParsedCertificate parsed =
        ctx::certificates::certificate_from_json(read_file(args.hint_path));
    add_candidates(options, scenario, parsed, args.tol);
  }
  if (!args.no_auto_hint) {
    if (auto candidate = isotropic_quantum_candidate(scenario, model)) {
      options.q1_candidates.push_back(*candidate);
      try {
        options.mnc_candidates.push_back(
            ctx::certificates::q1_to_mnc(*candidate, scenario, args.tol));
      } catch (const std::exception&) {
      }
    } else if (auto classical = classical_candidate(scenario, model)) {
      options.q1_candidates.push_back(*classical);
      try {
        options.mnc_candidates.push_back(
            ctx::certificates::q1_to_mnc(*classical, scenario, args.tol));
      } catch (const std::exception&) {
      }
    }
  }

  ctx::certificates::FeasibilityVerdict verdict;
  if (args.set == "q1")
    verdict = ctx::certificates::q1_check(scenario, model, options);
  else if (args.set == "mnc")
    verdict = ctx::certificates::mnc_check(scenario, model, options);
  else
    throw std::runtime_error("unknown membership set: " + args.set);

  report["verdict"] = verdict_json(verdict);
  if (verdict.q1)
    report["certificate"] =
        nlohmann::json::parse(ctx::certificates::certificate_to_json(*verdict.q1));
  else if (verdict.mnc)
    report["certificate"] =
        nlohmann::json::parse(ctx::certificates::certificate_to_json(*verdict.mnc));
  emit_report(report, args.out_path);
  std::cout << args.set << ": " << ctx::kernel::to_string(verdict.status);
  if (verdict.from_candidate) std::cout << " (candidate certificate)";
  if (verdict.status == ctx::kernel::SolveStatus::infeasible)
    std::cout << " (gap " << verdict.gap << ")";
  std::cout << "\n";
  return status_exit_code(verdict.status);
}

struct BisectArgs {
  std::string scenario_path;
  std::string set = "q1";
  std::string out_path;
  double lo = 0.5;
  double hi = 1.0;
  double tol = 0.005;
  long budget = 200000;
  double verify_tol = ctx::certificates::kVerifyTol;
};

struct BisectProbe {
  double lambda = 0.0;
  std::string status;
  bool from_candidate = false;
  bool warned = false;
  double gap = 0.0;
  long iterations = 0;
};

int run_bisect(const BisectArgs& args) {
  const ctx::ContextualityScenario scenario = load_scenario(args.scenario_path);
  if (!ctx::is_bell_scenario(scenario, 2, 2, 2))
    throw std::runtime_error(
        "bisect: the isotropic family is defined on B(2,2,2) only");
  if (args.tol < 0.002) throw std::runtime_error("bisect: tol must be >= 0.002");
  if (args.lo < 0.0 || args.hi > 1.0 || args.lo >= args.hi)
    throw std::runtime_error("bisect: need 0 <= lo < hi <= 1");
  if (args.set != "q1" && args.set != "mnc")
    throw std::runtime_error("bisect: set must be q1 or mnc");

  const double top = 1.0 / std::sqrt(2.0);
  std::vector<BisectProbe> probes;

  // Returns true when isotropic(lambda) is treated as a member of the set:
  // candidate certificate when available, solver verdict otherwise, and
  // "assume feasible and warn" for inconclusive runs.
  const auto feasible_at = [&](double lambda) {
    const ctx::ProbabilisticModel model =
        ctx::model_from_correlations(ctx::isotropic_box(lambda), scenario);
    ctx::certificates::CheckOptions options;
    options.tol = args.verify_tol;
    options.solve.max_iterations = args.budget;
    if (lambda <= top + 1e-9) {
      const ctx::QuantumRealization realization =
          ctx::noisy_tsirelson_realization(std::min(lambda, top));
      const ctx::certificates::Q1Certificate candidate =
          ctx::quantum_to_q1_certificate(realization, scenario);
      options.q1_candidates.push_back(candidate);
      try {
        options.mnc_candidates.push_back(
            ctx::certificates::q1_to_mnc(candidate, scenario, args.verify_tol));
      } catch (const std::exception&) {
      }
    }
    const ctx::certificates::FeasibilityVerdict verdict =
        (args.set == "q1") ? ctx::certificates::q1_check(scenario, model, options)
                           : ctx::certificates::mnc_check(scenario, model, options);
    BisectProbe probe;
    probe.lambda = lambda;
    probe.status = ctx::kernel::to_string(verdict.status);
    probe.from_candidate = verdict.from_candidate;
    probe.gap = verdict.gap;
    probe.iterations = verdict.iterations;
    probe.warned = verdict.status == ctx::kernel::SolveStatus::inconclusive;
    if (probe.warned)
      std::cerr << "warning: inconclusive at lambda=" << lambda
                << "; assuming feasible\n";
    probes.push_back(probe);
    return verdict.status != ctx::kernel::SolveStatus::infeasible;
  };

  nlohmann::json config{{"scenario", args.scenario_path}, {"set", args.set},
                        {"lo", args.lo},                  {"hi", args.hi},
                        {"tol", args.tol},                {"budget", args.budget}};
  nlohmann::json report = report_header("bisect", config);

  const bool lo_feasible = feasible_at(args.lo);
  const bool hi_feasible = feasible_at(args.hi);
  if (probes.size() == 2 && probes[0].warned && probes[1].warned)
    throw std::runtime_error("bisect: solver inconclusive at both endpoints");

  std::string outcome;
  double lo = args.lo, hi = args.hi;
  if (!lo_feasible) {
    outcome = "infeasible throughout";
  } else if (hi_feasible) {
    outcome = "feasible throughout";
  } else {
    while (hi - lo > args.tol) {
      const double mid = 0.5 * (lo + hi);
      if (feasible_at(mid))
        lo = mid;
      else
        hi = mid;
    }
    outcome = "bracketed";
  }

  nlohmann::json probe_log = nlohmann::json::array();
  for (const auto& p : probes)
    probe_log.push_back({{"lambda", p.lambda},
                         {"status", p.status},
                         {"from_candidate", p.from_candidate},
                         {"warned", p.warned},
                         {"gap", p.gap},
                         {"iterations", p.iterations}});
  report["probes"] = probe_log;
  report["outcome"] = outcome;
  if (outcome == "bracketed") {
    report["lambda_lo"] = lo;
    report["lambda_hi"] = hi;
    report["chsh_lo"] = 4.0 * lo;
    report["chsh_hi"] = 4.0 * hi;
    std::cout << "critical visibility in [" << lo << ", " << hi << "]"
              << " (CHSH " << 4.0 * lo << " .. " << 4.0 * hi << ")\n";
  } else {
    std::cout << outcome << " on [" << args.lo << ", " << args.hi << "]\n";
  }
  emit_report(report, args.out_path);
  return kExitMember;
}

struct SimulateArgs {
  std::string scenario_path;
  std::string model_path;
  std::string certificate_path;
  std::string out_path;
  std::string format = "json";
  long particles = 10000;
  long runs = 100000;
  std::uint64_t seed = 1;
  double alpha = 0.5;
  double witness_tol = 0.02;
  double z_threshold = 5.0;
  std::vector<int> edges;
};

int run_simulate(const SimulateArgs& args) {
  const ctx::ContextualityScenario scenario = load_scenario(args.scenario_path);
  const ctx::ProbabilisticModel model = load_model(args.model_path, scenario);

  ctx::macro::MacroRunConfig cfg;
  cfg.particles = args.particles;
  cfg.runs = args.runs;
  cfg.seed = args.seed;
  cfg.scaling_exponent = args.alpha;

  std::vector<int> edges = args.edges;
  if (edges.empty())
    for (int e = 0; e < scenario.edge_count(); ++e) edges.push_back(e);

  nlohmann::json config{{"scenario", args.scenario_path},
                        {"model", args.model_path},
                        {"N", args.particles},
                        {"S", args.runs},
                        {"seed", args.seed},
                        {"alpha", args.alpha},
                        {"z_threshold", args.z_threshold},
                        {"format", args.format}};
  if (!args.certificate_path.empty()) config["certificate"] = args.certificate_path;
  nlohmann::json report = report_header("simulate", config);

  bool all_pass = true;
  std::ostringstream csv;
  csv << "edge,u,v,N,S,empirical,theoretical,deviation,z\n";
  nlohmann::json edge_reports = nlohmann::json::array();
  for (int e : edges) {
    const ctx::macro::MacroSampleReport sample =
        ctx::macro::simulate_edge(scenario, model, e, cfg);
    const Eigen::MatrixXd theory =
        ctx::macro::theoretical_covariance(scenario, model, e);
    const ctx::macro::CovarianceComparison comparison =
        ctx::macro::covariance_compare(sample, theory, args.z_threshold);
    all_pass = all_pass && comparison.pass && sample.counts_conserved;

    nlohmann::json block;
    block["edge"] = e;
    block["vertices"] = sample.vertices;
    block["counts_conserved"] = sample.counts_conserved;
    block["mean"] = vector_json(sample.mean);
    block["covariance"] = matrix_json(sample.covariance);
    block["theory"] = matrix_json(theory);
    block["max_abs_deviation"] = comparison.max_abs_deviation;
    block["max_abs_z"] = comparison.max_abs_z;
    block["pass"] = comparison.pass;
    if (sample.runs >= 1000) {
      const ctx::macro::GaussianityReport gauss = ctx::macro::gaussianity_check(sample);
      block["skewness"] = vector_json(gauss.skewness);
      block["excess_kurtosis"] = vector_json(gauss.excess_kurtosis);
      block["theoretical_skewness"] = vector_json(gauss.theoretical_skewness);
      block["gaussianity_pass"] = gauss.pass;
      if (!gauss.notices.empty()) block["notices"] = gauss.notices;
    }
    edge_reports.push_back(block);

    const int k = static_cast<int>(sample.vertices.size());
    for (int i = 0; i < k; ++i)
      for (int j = i; j < k; ++j)
        csv << e << ',' << sample.vertices[i] << ',' << sample.vertices[j] << ','
            << args.particles << ',' << args.runs << ','
            << sample.covariance(i, j) << ',' << theory(i, j) << ','
            << comparison.deviation(i, j) << ',' << comparison.z(i, j) << "\n";
  }
  report["edges"] = edge_reports;

  if (!args.certificate_path.empty()) {
    const ctx::certificates::ParsedCertificate parsed =
        ctx::certificates::certificate_from_json(read_file(args.certificate_path));
    ctx::certificates::MncCertificate cert;
    if (parsed.mnc)
      cert = *parsed.mnc;
    else if (parsed.q1)
      cert = ctx::certificates::q1_to_mnc(*parsed.q1, scenario,
                                          ctx::certificates::kVerifyTol);
    else
      throw std::runtime_error("certificate file holds no certificate");
    const ctx::macro::GaussianWitness witness =
        ctx::macro::make_gaussian_witness(cert, scenario);
    const ctx::macro::WitnessSampleReport samples =
        ctx::macro::sample_global_gaussian(witness, scenario, args.runs, args.seed);
    const bool witness_pass = samples.max_abs_deviation < args.witness_tol;
    all_pass = all_pass && witness_pass;
    nlohmann::json w = nlohmann::json::parse(ctx::macro::witness_report_to_json(samples));
    w["pass"] = witness_pass;
    w["tolerance"] = args.witness_tol;
    report["gaussian_witness"] = w;
  }

  report["pass"] = all_pass;
  if (args.format == "csv") {
    if (!args.out_path.empty())
      write_file(args.out_path, csv.str());
    else
      std::cout << csv.str();
  } else {
    emit_report(report, args.out_path);
  }
  std::cout << (all_pass ? "simulation consistent with theory"
                         : "simulation deviates from theory")
            << "\n";
  return all_pass ? kExitMember : kExitNonMember;
}

struct TransformArgs {
  std::string in_path;
  std::string scenario_path;
  std::string out_path;
  std::string to;
  double tol = ctx::certificates::kVerifyTol;
};

int run_transform(const TransformArgs& args) {
  const ctx::ContextualityScenario scenario = load_scenario(args.scenario_path);
  const ctx::certificates::ParsedCertificate parsed =
      ctx::certificates::certificate_from_json(read_file(args.in_path));
  if (args.to != "q1" && args.to != "mnc")
    throw std::runtime_error("transform: --to must be q1 or mnc");
  if (args.out_path.empty()) throw std::runtime_error("transform requires --out");

  std::string out_text;
  if (args.to == "mnc") {
    if (!parsed.q1) throw std::runtime_error("transform to mnc requires a q1 certificate");
    const ctx::certificates::MncCertificate out =
        ctx::certificates::q1_to_mnc(*parsed.q1, scenario, args.tol);
    const auto check = ctx::certificates::verify_mnc_certificate(
        out, scenario, ctx::ProbabilisticModel{out.model}, args.tol);
    if (!check.ok)
      throw std::runtime_error("transformed certificate fails verification: " +
                               check.violations.front().what);
    out_text = ctx::certificates::certificate_to_json(out);
  } else {
    if (!parsed.mnc) throw std::runtime_error("transform to q1 requires an mnc certificate");
    const ctx::certificates::Q1Certificate out =
        ctx::certificates::mnc_to_q1(*parsed.mnc, scenario, args.tol);
    const auto check = ctx::certificates::verify_q1_certificate(
        out, scenario, ctx::ProbabilisticModel{out.model}, args.tol);
    if (!check.ok)
      throw std::runtime_error("transformed certificate fails verification: " +
                               check.violations.front().what);
    out_text = ctx::certificates::certificate_to_json(out);
  }
  write_file(args.out_path, out_text + "\n");
  std::cout << "wrote verified " << args.to << " certificate to " << args.out_path
            << "\n";
  return kExitMember;
}

int run_info(const std::string& path) {
  const std::string text = read_file(path);
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.contains("vertices") && j.contains("edges")) {
    const ctx::ContextualityScenario s = ctx::scenario_from_json(text);
    std::cout << "scenario file\n";
    print_scenario_summary(s);
    const bool chsh = ctx::is_bell_scenario(s, 2, 2, 2);
    if (chsh) std::cout << "matches B(2,2,2)\n";
  } else if (j.contains("kind") && j.contains("matrix")) {
    const ctx::certificates::ParsedCertificate parsed =
        ctx::certificates::certificate_from_json(text);
    const Eigen::MatrixXd& m = parsed.q1 ? parsed.q1->m : parsed.mnc->gamma;
    std::cout << "certificate file (kind " << j["kind"].get<std::string>() << ")\n";
    std::cout << "size: " << m.rows() << "\n";
    const ctx::kernel::EighResult eig = ctx::kernel::eigh(0.5 * (m + m.transpose()));
    std::cout << "min eigenvalue: " << eig.eigenvalues(0) << "\n";
  } else if (j.contains("P")) {
    const ctx::CorrelationTable c = ctx::correlations_from_json(text);
    std::cout << "correlation table: n=" << c.n << " m=" << c.m << " d=" << c.d << "\n";
  } else if (j.contains("contexts")) {
    const ctx::MarginalScenario x = ctx::marginal_from_json(text);
    std::cout << "marginal scenario: " << x.observables.size() << " observables, "
              << x.contexts.size() << " contexts, " << x.outcomes << " outcomes\n";
    std::cout << "protocols: " << ctx::count_protocols(x) << "\n";
  } else if (j.contains("dim") && j.contains("rho")) {
    const ctx::QuantumRealization r = ctx::realization_from_json(text);
    std::cout << "quantum realization: dim " << r.dim << ", " << r.projectors.size()
              << " projectors\n";
  } else if (j.contains("p")) {
    const ctx::ProbabilisticModel m = ctx::model_from_json(text);
    std::cout << "model file: " << m.p.size() << " entries, sum " << m.p.sum()
              << ", range [" << m.p.minCoeff() << ", " << m.p.maxCoeff() << "]\n";
  } else {
    std::cout << "unrecognized file contents\n";
    return kExitInconclusive;
  }
  return kExitMember;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextuality scenario toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  BuildArgs build_args;
  CLI::App* build = app.add_subcommand("build", "construct a scenario file");
  build->add_option("kind", build_args.kind, "bell | marginal | triangle | single-edge")
      ->required();
  build->add_option("--parties,-n", build_args.parties, "Bell parties");
  build->add_option("--settings,-m", build_args.settings, "Bell settings per party");
  build->add_option("--outcomes,-d", build_args.outcomes,
                    "outcomes per observable / edge size");
  build->add_option("--in", build_args.in_path, "marginal scenario input file");
  build->add_option("--out", build_args.out_path, "output scenario file");
  build->add_option("--budget", build_args.protocol_budget,
                    "protocol enumeration budget");

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand("check", "membership check for a model");
  check->add_option("set", check_args.set, "classical | q1 | mnc")->required();
  check->add_option("--scenario", check_args.scenario_path)->required();
  check->add_option("--model", check_args.model_path)->required();
  check->add_option("--out", check_args.out_path, "report file");
  check->add_option("--hint", check_args.hint_path, "candidate certificate file");
  check->add_option("--route", check_args.route, "q1 route: gamma | native");
  check->add_option("--tol", check_args.tol, "verification tolerance");
  check->add_option("--budget", check_args.budget, "solver iteration budget");
  check->add_option("--node-budget", check_args.node_budget,
                    "deterministic enumeration budget");
  check->add_flag("--no-auto-hint", check_args.no_auto_hint,
                  "disable automatic candidate certificates");

  BisectArgs bisect_args;
  CLI::App* bisect =
      app.add_subcommand("bisect", "critical visibility of the isotropic family");
  bisect->add_option("--scenario", bisect_args.scenario_path)->required();
  bisect->add_option("--set", bisect_args.set, "q1 | mnc");
  bisect->add_option("--lo", bisect_args.lo, "lower visibility");
  bisect->add_option("--hi", bisect_args.hi, "upper visibility");
  bisect->add_option("--tol", bisect_args.tol, "bracket width (>= 0.002)");
  bisect->add_option("--budget", bisect_args.budget, "solver iteration budget");
  bisect->add_option("--out", bisect_args.out_path, "report file");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "macroscopic extension run");
  simulate->add_option("--scenario", sim_args.scenario_path)->required();
  simulate->add_option("--model", sim_args.model_path)->required();
  simulate->add_option("--N", sim_args.particles, "particles per run");
  simulate->add_option("--S", sim_args.runs, "runs per edge");
  simulate->add_option("--seed", sim_args.seed, "stream seed");
  simulate->add_option("--alpha", sim_args.alpha,
                       "fluctuation scaling exponent (diagnostic; theory uses 1/2)");
  simulate->add_option("--edge", sim_args.edges, "edge indices (default: all)");
  simulate->add_option("--certificate", sim_args.certificate_path,
                       "certificate for the Gaussian-witness comparison");
  simulate->add_option("--witness-tol", sim_args.witness_tol,
                       "witness covariance tolerance");
  simulate->add_option("--z", sim_args.z_threshold, "z-score threshold");
  simulate->add_option("--format", sim_args.format, "json | csv");
  simulate->add_option("--out", sim_args.out_path, "report file");

  TransformArgs transform_args;
  CLI::App* transform = app.add_subcommand("transform", "convert certificate kinds");
  transform->add_option("--in", transform_args.in_path)->required();
  transform->add_option("--scenario", transform_args.scenario_path)->required();
  transform->add_option("--to", transform_args.to, "q1 | mnc")->required();
  transform->add_option("--out", transform_args.out_path)->required();
  transform->add_option("--tol", transform_args.tol, "verification tolerance");

  std::string info_path;
  CLI::App* info = app.add_subcommand("info", "summarize a toolkit file");
  info->add_option("file", info_path, "file to inspect")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return run_build(build_args);
    if (check->parsed()) return run_check(check_args);
    if (bisect->parsed()) return run_bisect(bisect_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (transform->parsed()) return run_transform(transform_args);
    if (info->parsed()) return run_info(info_path);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInconclusive;
  }
  return kExitInconclusive;
}
