#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctx/builders.hpp"
#include "ctx/certificates.hpp"
#include "ctx/model_sets.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

// End-to-end tests of the ctxtool binary: every subcommand, the exit-code
// contract (0 member / 1 non-member / 2 error or inconclusive), and the
// report format.  Fixtures are generated with the library and handed to the
// tool through files, the way a user would drive it.

using namespace ctx;
using nlohmann::json;

namespace {

std::filesystem::path fixture_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("ctxtool_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_of(const std::string& name) {
  return (fixture_dir() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_tool(const std::string& args) {
  const std::string out_path = path_of("stdout.txt");
  const std::string err_path = path_of("stderr.txt");
  const std::string command = std::string("\"") + CTXTOOL_PATH + "\" " + args +
                              " > " + out_path + " 2> " + err_path;
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_text(out_path);
  result.err = read_text(err_path);
  return result;
}

// Shared fixtures, built once.
struct Fixtures {
  std::string b222 = path_of("b222.json");
  std::string coin_scenario = path_of("coin_scenario.json");
  std::string coin_model = path_of("coin_model.json");
  std::string triangle_scenario = path_of("triangle.json");
  std::string triangle_model = path_of("triangle_model.json");
  std::string uniform = path_of("uniform.json");
  std::string pr = path_of("pr.json");
  std::string tsirelson = path_of("tsirelson.json");
  std::string iso65 = path_of("iso65.json");

  Fixtures() {
    write_text(b222, scenario_to_json(bell_scenario(2, 2, 2)));
    const auto coin = new_scenario({"heads", "tails"}, {{0, 1}});
    write_text(coin_scenario, scenario_to_json(coin));
    ProbabilisticModel half;
    half.p = Eigen::Vector2d(0.5, 0.5);
    write_text(coin_model, model_to_json(half));
    write_text(triangle_scenario,
               scenario_to_json(new_scenario({"a", "b", "c"}, {{0, 1}, {1, 2}, {0, 2}})));
    ProbabilisticModel halves;
    halves.p = Eigen::Vector3d(0.5, 0.5, 0.5);
    write_text(triangle_model, model_to_json(halves));
    write_text(uniform, correlations_to_json(uniform_box()));
    write_text(pr, correlations_to_json(pr_box()));
    write_text(tsirelson, correlations_to_json(tsirelson_box()));
    write_text(iso65, correlations_to_json(isotropic_box(0.65)));
  }
};

const Fixtures& fixtures() {
  static Fixtures f;
  return f;
}

}  // namespace

TEST_CASE("build constructs scenario files") {
  const std::string out = path_of("built_bell.json");
  const auto result = run_tool("build bell -n 2 -m 2 -d 2 --out " + out);
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("vertices: 16") != std::string::npos);

  const auto scenario = scenario_from_json(read_text(out));
  CHECK(scenario.vertex_count() == 16);
  CHECK(scenario.edge_count() == 12);
  CHECK(is_bell_scenario(scenario, 2, 2, 2));

  const std::string tri = path_of("built_triangle.json");
  CHECK(run_tool("build triangle --out " + tri).exit_code == 0);
  const auto triangle = scenario_from_json(read_text(tri));
  CHECK(triangle.vertex_count() == 3);
  CHECK(triangle.edge_count() == 3);

  const std::string edge = path_of("built_edge.json");
  CHECK(run_tool("build single-edge -d 4 --out " + edge).exit_code == 0);
  const auto single = scenario_from_json(read_text(edge));
  CHECK(single.vertex_count() == 4);
  CHECK(single.edge_count() == 1);
}

TEST_CASE("check classical separates the uniform box from the pr box") {
  const auto& f = fixtures();

  const auto uniform = run_tool("check classical --scenario " + f.b222 +
                                " --model " + f.uniform);
  CHECK(uniform.exit_code == 0);
  CHECK(uniform.out.find("classical (margin") != std::string::npos);

  const auto pr = run_tool("check classical --scenario " + f.b222 + " --model " + f.pr);
  CHECK(pr.exit_code == 1);
  CHECK(pr.out.find("not classical") != std::string::npos);
}

TEST_CASE("check q1 accepts the tsirelson box with a verifiable report") {
  const auto& f = fixtures();
  const std::string report_path = path_of("tsirelson_report.json");

  const auto result = run_tool("check q1 --scenario " + f.b222 + " --model " +
                               f.tsirelson + " --out " + report_path);
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("feasible") != std::string::npos);
  CHECK(result.out.find("candidate certificate") != std::string::npos);

  const json report = json::parse(read_text(report_path));
  CHECK(report["tool"] == "ctxtool");
  CHECK(report["version"] == "0.1.0");
  CHECK(report["command"] == "check");
  CHECK(report["config"]["set"] == "q1");
  CHECK(report["verdict"]["status"] == "feasible");
  CHECK(report["verdict"]["from_candidate"] == true);

  // The emitted certificate must verify against the model, independently.
  const auto scenario = scenario_from_json(read_text(f.b222));
  const auto model = model_from_correlations(tsirelson_box(), scenario);
  const auto parsed =
      certificates::certificate_from_json(report["certificate"].dump());
  REQUIRE(parsed.q1.has_value());
  CHECK(certificates::verify_q1_certificate(*parsed.q1, scenario, model).ok);
}

TEST_CASE("check mnc rejects the triangle at one half") {
  const auto& f = fixtures();
  const std::string report_path = path_of("triangle_report.json");

  const auto result = run_tool("check mnc --scenario " + f.triangle_scenario +
                               " --model " + f.triangle_model + " --out " + report_path);
  CHECK(result.exit_code == 1);
  CHECK(result.out.find("infeasible") != std::string::npos);

  const json report = json::parse(read_text(report_path));
  CHECK(report["verdict"]["status"] == "infeasible");
  CHECK(std::abs(report["verdict"]["gap"].get<double>() - 0.25) <= 1e-9);
}

TEST_CASE("check without the automatic hint still solves interior points") {
  const auto& f = fixtures();
  const std::string report_path = path_of("iso65_report.json");

  const auto result = run_tool("check mnc --scenario " + f.b222 + " --model " +
                               f.iso65 + " --no-auto-hint --out " + report_path);
  CHECK(result.exit_code == 0);

  const json report = json::parse(read_text(report_path));
  CHECK(report["verdict"]["status"] == "feasible");
  CHECK(report["verdict"]["from_candidate"] == false);
  CHECK(report["verdict"]["iterations"].get<long>() > 0);
}

TEST_CASE("bisect brackets the isotropic boundary") {
  const auto& f = fixtures();
  const std::string report_path = path_of("bisect_report.json");

  const auto result = run_tool("bisect --scenario " + f.b222 +
                               " --set q1 --lo 0.5 --hi 1.0 --tol 0.005 --out " +
                               report_path);
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("critical visibility") != std::string::npos);

  const json report = json::parse(read_text(report_path));
  CHECK(report["outcome"] == "bracketed");
  const double lo = report["lambda_lo"].get<double>();
  const double hi = report["lambda_hi"].get<double>();
  const double boundary = 1.0 / std::sqrt(2.0);
  CHECK(lo <= boundary);
  CHECK(hi >= boundary);
  CHECK(hi - lo <= 0.005 + 1e-12);
  CHECK(std::abs(report["chsh_lo"].get<double>() - 4.0 * lo) <= 1e-12);
  CHECK(std::abs(report["chsh_hi"].get<double>() - 4.0 * hi) <= 1e-12);

  // The tolerance floor is enforced.
  const auto too_fine = run_tool("bisect --scenario " + f.b222 +
                                 " --lo 0.5 --hi 1.0 --tol 0.0001");
  CHECK(too_fine.exit_code == 2);
}

TEST_CASE("simulate reports covariance agreement in json and csv") {
  const auto& f = fixtures();
  const std::string report_path = path_of("sim_report.json");

  const auto result = run_tool("simulate --scenario " + f.coin_scenario +
                               " --model " + f.coin_model +
                               " --N 10000 --S 5000 --seed 5 --out " + report_path);
  CHECK(result.exit_code == 0);
  CHECK(result.out.find("consistent") != std::string::npos);

  const json report = json::parse(read_text(report_path));
  CHECK(report["pass"] == true);
  REQUIRE(report["edges"].size() == 1);
  CHECK(report["edges"][0]["counts_conserved"] == true);
  CHECK(report["edges"][0]["gaussianity_pass"] == true);

  const std::string csv_path = path_of("sim.csv");
  const auto csv = run_tool("simulate --scenario " + f.coin_scenario + " --model " +
                            f.coin_model + " --N 1000 --S 2000 --seed 5" +
                            " --format csv --out " + csv_path);
  CHECK(csv.exit_code == 0);
  std::istringstream lines(read_text(csv_path));
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "edge,u,v,N,S,empirical,theoretical,deviation,z");
  int rows = 0;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);  // unordered pairs of a two-outcome edge, diagonal included
}

TEST_CASE("simulate exposes the scaling exponent as a diagnostic") {
  const auto& f = fixtures();
  // With alpha = 1 the fluctuations are scaled down by a further sqrt(N), so
  // the empirical covariance collapses and no longer matches the limit.
  const auto result = run_tool("simulate --scenario " + f.coin_scenario +
                               " --model " + f.coin_model +
                               " --N 10000 --S 5000 --seed 5 --alpha 1.0");
  CHECK(result.exit_code == 1);
  CHECK(result.out.find("deviates") != std::string::npos);
}

TEST_CASE("simulate validates a certificate witness end to end") {
  const auto& f = fixtures();

  // Get a verified certificate out of a check run ...
  const std::string check_report = path_of("coin_check.json");
  REQUIRE(run_tool("check mnc --scenario " + f.coin_scenario + " --model " +
                   f.coin_model + " --out " + check_report)
              .exit_code == 0);
  const json report = json::parse(read_text(check_report));
  const std::string cert_path = path_of("coin_cert.json");
  write_text(cert_path, report["certificate"].dump());

  // ... and feed it back as the global Gaussian witness.
  const std::string sim_report_path = path_of("witness_report.json");
  const auto result = run_tool("simulate --scenario " + f.coin_scenario +
                               " --model " + f.coin_model +
                               " --N 10000 --S 5000 --seed 5 --certificate " +
                               cert_path + " --out " + sim_report_path);
  CHECK(result.exit_code == 0);

  const json sim_report = json::parse(read_text(sim_report_path));
  CHECK(sim_report["gaussian_witness"]["pass"] == true);
  CHECK(sim_report["gaussian_witness"]["max_abs_deviation"].get<double>() < 0.02);
}

TEST_CASE("transform converts certificates both ways and verifies first") {
  const auto& f = fixtures();

  const auto scenario = new_scenario({"heads", "tails"}, {{0, 1}});
  ProbabilisticModel half;
  half.p = Eigen::Vector2d(0.5, 0.5);
  const auto verdict = certificates::mnc_check(scenario, half);
  REQUIRE(verdict.mnc.has_value());
  const std::string mnc_path = path_of("transform_in.json");
  write_text(mnc_path, certificates::certificate_to_json(*verdict.mnc) + "\n");

  const std::string q1_path = path_of("transform_q1.json");
  const std::string back_path = path_of("transform_back.json");
  CHECK(run_tool("transform --in " + mnc_path + " --scenario " + f.coin_scenario +
                 " --to q1 --out " + q1_path)
            .exit_code == 0);
  CHECK(run_tool("transform --in " + q1_path + " --scenario " + f.coin_scenario +
                 " --to mnc --out " + back_path)
            .exit_code == 0);
  CHECK(read_text(back_path) == read_text(mnc_path));

  // A corrupted certificate is rejected and nothing is written.
  json broken = json::parse(read_text(q1_path));
  broken["matrix"][1] = 0.4;  // border no longer matches the model
  const std::string broken_path = path_of("transform_broken.json");
  write_text(broken_path, broken.dump());
  const std::string blocked_path = path_of("transform_blocked.json");
  const auto rejected = run_tool("transform --in " + broken_path + " --scenario " +
                                 f.coin_scenario + " --to mnc --out " + blocked_path);
  CHECK(rejected.exit_code == 2);
  CHECK_FALSE(std::filesystem::exists(blocked_path));
}

TEST_CASE("info identifies toolkit files") {
  const auto& f = fixtures();

  const auto scenario_info = run_tool("info " + f.b222);
  CHECK(scenario_info.exit_code == 0);
  CHECK(scenario_info.out.find("scenario file") != std::string::npos);
  CHECK(scenario_info.out.find("matches B(2,2,2)") != std::string::npos);

  const auto correlations_info = run_tool("info " + f.pr);
  CHECK(correlations_info.exit_code == 0);
  CHECK(correlations_info.out.find("correlation table") != std::string::npos);

  const std::string cert_path = path_of("info_cert.json");
  const auto coin = new_scenario({"heads", "tails"}, {{0, 1}});
  ProbabilisticModel half;
  half.p = Eigen::Vector2d(0.5, 0.5);
  write_text(cert_path, certificates::certificate_to_json(
                            *certificates::mnc_check(coin, half).mnc));
  const auto cert_info = run_tool("info " + cert_path);
  CHECK(cert_info.exit_code == 0);
  CHECK(cert_info.out.find("certificate file (kind mnc)") != std::string::npos);
}

TEST_CASE("errors surface as exit code 2 with a message") {
  const auto& f = fixtures();

  const auto missing = run_tool("check q1 --scenario /nonexistent.json --model " +
                                f.uniform);
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("error:") != std::string::npos);

  const auto bad_set = run_tool("check almost --scenario " + f.b222 + " --model " +
                                f.uniform);
  CHECK(bad_set.exit_code == 2);

  const auto bad_args = run_tool("check q1");  // missing required options
  CHECK(bad_args.exit_code != 0);

  const std::string garbage_path = path_of("garbage.json");
  write_text(garbage_path, "{\"surprise\": true}");
  CHECK(run_tool("info " + garbage_path).exit_code == 2);
}
