#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cvqkd/sweep.hpp"

using namespace cvqkd;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status;
  std::string out;
  std::string err;
};

RunResult run_spec(SweepSpec spec) {
  std::ostringstream out, err;
  const int status = run(spec, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("nla_cvqkd_" + name);
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

// Exit code of the installed binary, plus its stdout.
#ifdef NLA_CLI_PATH
RunResult run_binary(const std::string& args) {
  const fs::path out_path = temp_file("stdout.txt");
  const fs::path err_path = temp_file("stderr.txt");
  const std::string cmd = std::string(NLA_CLI_PATH) + " " + args + " > " +
                          out_path.string() + " 2> " + err_path.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}
#endif

}  // namespace

TEST_CASE("keyrate subcommand emits one CSV row", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::keyrate;
  spec.losses_db = 10.0;
  spec.epsilon = 0.05;
  spec.epr_lambda = 0.5;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) ==
          "loss_db,T,lambda,mutual_info,holevo,keyrate_nonla,keyrate_nla");
  REQUIRE(r.out.find("keyrate_nla = ") != std::string::npos);
}

TEST_CASE("infeasible operating point exits with a domain status", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::keyrate;
  spec.losses_db = 0.0;
  spec.gain = 4.0;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 3);
  REQUIRE(r.err.find("error:") != std::string::npos);
  REQUIRE(r.out.empty());
}

TEST_CASE("convergence failures exit with their own status", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::lambda_opt;
  spec.recon_beta = 1.0;  // supremum at the edge of the domain, no root
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 4);
  REQUIRE(r.err.find("error:") != std::string::npos);
}

TEST_CASE("unwritable output exits with an io status", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::lambda_opt;
  spec.output = "/nonexistent-dir/file.csv";
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 5);
}

TEST_CASE("effective params report infeasibility in-band", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::effective_params_report;
  spec.losses_db = 0.0;
  spec.gain = 4.0;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) == "gain,zeta,eta,eps_g,feasible,binding");
  REQUIRE(r.out.find("eta_gt_one") != std::string::npos);
  REQUIRE(r.out.find("infeasible") != std::string::npos);
}

TEST_CASE("lambda-opt prints the optimum", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::lambda_opt;
  spec.recon_beta = 0.95;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) == "beta,lambda_opt");
  REQUIRE(r.out.find("0.806") != std::string::npos);
}

TEST_CASE("tlim reports both transmittance and loss", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::tlim;
  spec.epsilon = 0.05;
  spec.recon_beta = 0.95;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) == "lambda,epsilon,beta,gain,t_lim,loss_db");
  REQUIRE(r.out.find("28.02") != std::string::npos);
}

TEST_CASE("sweep over losses locates both crossings", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::sweep_losses;
  spec.epsilon = 0.05;
  spec.recon_beta = 0.95;
  spec.gain = 4.0;
  spec.range_start = 0.0;
  spec.range_stop = 50.0;
  spec.range_step = 0.5;
  spec.output = temp_file("sweep.csv").string();
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);

  // Interpolate both zero crossings from the CSV and compare the shift
  // against the amplifier's 20 log10(g).
  std::ifstream csv(spec.output);
  std::string line;
  std::getline(csv, line);
  REQUIRE(line == "loss_db,T,opt_var,keyrate_nonla,keyrate_nla");
  double cross_plain = -1.0, cross_nla = -1.0;
  double prev_db = 0.0, prev_plain = 0.0, prev_nla = 0.0;
  bool first = true;
  while (std::getline(csv, line)) {
    double db, t, opt, plain, nla;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &db, &t, &opt,
                        &plain, &nla) == 5);
    if (!first) {
      if (prev_plain > 0.0 && plain <= 0.0)
        cross_plain = prev_db + 0.5 * prev_plain / (prev_plain - plain);
      if (!std::isnan(nla) && !std::isnan(prev_nla) && prev_nla > 0.0 &&
          nla <= 0.0)
        cross_nla = prev_db + 0.5 * prev_nla / (prev_nla - nla);
    }
    prev_db = db;
    prev_plain = plain;
    prev_nla = nla;
    first = false;
  }
  REQUIRE(cross_plain > 0.0);
  REQUIRE(cross_nla > 0.0);
  REQUIRE(cross_nla - cross_plain == Catch::Approx(12.0).margin(0.25));
}

TEST_CASE("csv output is byte stable across runs and thread counts", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::sweep_losses;
  spec.epsilon = 0.05;
  spec.gain = 2.0;
  spec.range_start = 20.0;
  spec.range_stop = 30.0;
  spec.range_step = 0.5;

  spec.jobs = 1;
  spec.output = temp_file("a.csv").string();
  REQUIRE(run_spec(spec).status == 0);
  spec.jobs = 4;
  spec.output = temp_file("b.csv").string();
  REQUIRE(run_spec(spec).status == 0);
  spec.output = temp_file("c.csv").string();
  REQUIRE(run_spec(spec).status == 0);

  const std::string a = slurp(temp_file("a.csv"));
  REQUIRE_FALSE(a.empty());
  REQUIRE(a == slurp(temp_file("b.csv")));
  REQUIRE(a == slurp(temp_file("c.csv")));
}

TEST_CASE("contour command reports unreachable rows as nan", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::contour_noise;
  spec.recon_beta = 0.95;
  spec.gain = 2.0;
  spec.range_start = 0.0;
  spec.range_stop = 6.0;
  spec.range_step = 3.0;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) == "loss_db,T,eps_max_nonla,eps_max_nla");
  // At 0 dB any gain above 1 pushes the effective transmittance past 1,
  // so the amplified column has no tolerable-noise value there; the
  // unamplified column stays finite.
  REQUIRE(r.out.find("nan") != std::string::npos);
  const size_t row0 = r.out.find("\n0,");
  REQUIRE(row0 != std::string::npos);
  const std::string line = r.out.substr(row0 + 1, r.out.find('\n', row0 + 1) -
                                                      row0 - 1);
  REQUIRE(line.find("nan") != std::string::npos);
  // Rows away from 0 dB are fully populated.
  REQUIRE(r.out.find("\n6,") != std::string::npos);
}

TEST_CASE("gain scan emits feasibility flags", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::gain_scan_curve;
  spec.losses_db = 30.0;
  spec.epsilon = 0.05;
  spec.gains = {1.0, 2.0, 1000.0};
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) == "gain,keyrate,feasible");
  REQUIRE(r.out.find(",0\n") != std::string::npos);
  REQUIRE(r.out.find("best gain") != std::string::npos);
}

TEST_CASE("gain scan can emit the feasibility ceiling", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::gain_scan_curve;
  spec.gmax_curve = true;
  spec.epsilon = 0.2;
  spec.range_start = 10.0;
  spec.range_stop = 20.0;
  spec.range_step = 5.0;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) == "loss_db,T,g_max");
  REQUIRE(r.out.find("4.83806736644") != std::string::npos);  // 10 dB row
}

TEST_CASE("oracle verification passes at the reference point", "[cli]") {
  SweepSpec spec;
  spec.command = Subcommand::oracle_verify;
  spec.epr_lambda = 0.3;
  spec.transmittance = 0.1;
  spec.epsilon = 0.05;
  spec.gain = 1.5;
  spec.dim = 40;
  const RunResult r = run_spec(spec);
  REQUIRE(r.status == 0);
  REQUIRE(first_line(r.out) ==
          "lambda,T,epsilon,gain,dim,quadrature_order,max_deviation");
  REQUIRE(r.out.find("max deviation = ") != std::string::npos);
}

#ifdef NLA_CLI_PATH

TEST_CASE("binary rejects unknown flags", "[cli]") {
  const RunResult r = run_binary("keyrate --no-such-flag");
  REQUIRE(r.status == 2);
}

TEST_CASE("binary requires a subcommand", "[cli]") {
  const RunResult r = run_binary("");
  REQUIRE(r.status == 2);
}

TEST_CASE("binary prints help", "[cli]") {
  const RunResult r = run_binary("--help");
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("keyrate") != std::string::npos);
  REQUIRE(r.out.find("oracle-verify") != std::string::npos);
}

TEST_CASE("binary lambda-opt summary lands on stdout", "[cli]") {
  const RunResult r = run_binary("lambda-opt -b 0.95");
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("0.806") != std::string::npos);
}

TEST_CASE("binary oracle-verify at the reference point", "[cli]") {
  const RunResult r = run_binary(
      "oracle-verify --lambda 0.3 --T 0.1 --epsilon 0.05 --gain 1.5 --dim 60");
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("max deviation = ") != std::string::npos);
}

TEST_CASE("binary reports infeasible points on stderr with status 3", "[cli]") {
  const RunResult r = run_binary("keyrate -l 0 -g 4");
  REQUIRE(r.status == 3);
  REQUIRE(r.err.find("error:") != std::string::npos);
}

TEST_CASE("binary range syntax is validated", "[cli]") {
  const RunResult r = run_binary("sweep-losses -r not-a-range");
  REQUIRE(r.status == 2);
}

#endif
