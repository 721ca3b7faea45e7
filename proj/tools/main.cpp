// Command-line front end: key rates, effective channel parameters and
// parameter sweeps for a CV-QKD link with an optional noiseless amplifier.
// CSV goes to --output (stdout by default); a one-line summary goes to
// stdout and diagnostics go to stderr.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cvqkd/cvqkd.hpp"

namespace {

double parse_psuc(const std::string& text) {
  if (text == "upper") return -1.0;
  try {
    return std::stod(text);
  } catch (...) {
    throw CLI::ValidationError("--psuc", "expected 'upper' or a number");
  }
}

void parse_range(const std::string& text, double& a, double& b, double& c) {
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &a, &b, &c) != 3)
    throw CLI::ValidationError("range", "expected start:stop:step, got " + text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic key rates for Gaussian-modulated CV-QKD with an "
               "optional noiseless amplifier"};
  app.require_subcommand(1);
  app.set_config("--config");

  cvqkd::SweepSpec spec;
  std::string psuc_text = "upper";
  std::string range_text, beta_range_text, gains_text;

  app.add_option("-o,--output", spec.output,
                 "Write CSV here instead of stdout");
  app.add_option("-j,--jobs", spec.jobs,
                 "Worker threads (default: NLA_CVQKD_JOBS or all cores)");

  auto add_common = [&](CLI::App* cmd, bool with_gain = true) {
    cmd->add_option("-e,--epsilon", spec.epsilon, "Channel excess noise");
    cmd->add_option("-b,--beta", spec.recon_beta, "Reconciliation efficiency");
    if (with_gain) cmd->add_option("-g,--gain", spec.gain, "Amplifier gain");
  };

  auto* keyrate = app.add_subcommand(
      "keyrate", "Key rate at one operating point, with and without the "
                 "amplifier");
  add_common(keyrate);
  keyrate->add_option("-l,--losses", spec.losses_db, "Channel losses in dB");
  keyrate->add_option("--lambda", spec.epr_lambda, "Source strength");
  keyrate->add_option("--psuc", psuc_text,
                      "Success probability: 'upper' or a fixed value");

  auto* effective = app.add_subcommand(
      "effective-params",
      "Equivalent unamplified parameters (zeta, eta, eps_g) and feasibility");
  add_common(effective);
  effective->add_option("-l,--losses", spec.losses_db, "Channel losses in dB");
  effective->add_option("--lambda", spec.epr_lambda, "Source strength");

  auto* sweep = app.add_subcommand(
      "sweep-losses",
      "Source-optimized key rate versus channel loss, with and without the "
      "amplifier");
  add_common(sweep);
  sweep->add_option("-r,--range", range_text, "Loss range start:stop:step dB");
  sweep->add_option("--psuc", psuc_text,
                    "Success probability: 'upper' or a fixed value");

  auto* contour = app.add_subcommand(
      "contour-noise", "Largest tolerable excess noise versus channel loss");
  add_common(contour);
  contour->add_option("-r,--range", range_text,
                      "Loss range start:stop:step dB");

  auto* gscan = app.add_subcommand(
      "gain-scan", "Optimized key rate versus amplifier gain at fixed loss");
  add_common(gscan, false);
  gscan->add_option("-l,--losses", spec.losses_db, "Channel losses in dB");
  gscan->add_option("--gains", gains_text, "Comma-separated gain list");
  gscan->add_flag("--gmax-curve", spec.gmax_curve,
                  "Emit the largest feasible gain versus loss instead");
  gscan->add_option("-r,--range", range_text,
                    "Loss range start:stop:step dB (with --gmax-curve)");
  gscan->add_option("--psuc", psuc_text,
                    "Success probability: 'upper' or a fixed value");

  auto* tlim = app.add_subcommand(
      "tlim", "Strong-loss transmittance limit for a positive key rate");
  add_common(tlim);
  tlim->add_option("--lambda", spec.epr_lambda,
                   "Source strength (default: optimal for beta)");

  auto* lopt = app.add_subcommand(
      "lambda-opt", "Source strength maximizing the strong-loss key rate");
  lopt->add_option("-b,--beta", spec.recon_beta, "Reconciliation efficiency");
  lopt->add_flag("--sweep", spec.beta_sweep, "Sweep beta instead");
  lopt->add_option("--beta-range", beta_range_text,
                   "Beta range start:stop:step for --sweep");

  auto* oracle = app.add_subcommand(
      "oracle-verify",
      "Compare the equivalent-channel covariance against a truncated "
      "Fock-space simulation");
  add_common(oracle);
  oracle->add_option("-l,--losses", spec.losses_db, "Channel losses in dB");
  oracle->add_option("--T", spec.transmittance,
                     "Channel transmittance (overrides --losses)");
  oracle->add_option("--lambda", spec.epr_lambda, "Source strength");
  oracle->add_option("--dim", spec.dim, "Fock-space cutoff");
  oracle->add_option("--order", spec.quadrature_order,
                     "Gauss-Hermite order per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const double p = parse_psuc(psuc_text);
    spec.psuc = p < 0.0 ? cvqkd::SuccessModel::upper_bound()
                        : cvqkd::SuccessModel::constant(p);
    if (!range_text.empty())
      parse_range(range_text, spec.range_start, spec.range_stop,
                  spec.range_step);
    if (!beta_range_text.empty())
      parse_range(beta_range_text, spec.beta_start, spec.beta_stop,
                  spec.beta_step);
    if (!gains_text.empty()) {
      spec.gains.clear();
      std::stringstream ss(gains_text);
      std::string item;
      while (std::getline(ss, item, ',')) spec.gains.push_back(std::stod(item));
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  if (keyrate->parsed()) spec.command = cvqkd::Subcommand::keyrate;
  if (effective->parsed())
    spec.command = cvqkd::Subcommand::effective_params_report;
  if (sweep->parsed()) spec.command = cvqkd::Subcommand::sweep_losses;
  if (contour->parsed()) spec.command = cvqkd::Subcommand::contour_noise;
  if (gscan->parsed()) spec.command = cvqkd::Subcommand::gain_scan_curve;
  if (tlim->parsed()) spec.command = cvqkd::Subcommand::tlim;
  if (lopt->parsed()) spec.command = cvqkd::Subcommand::lambda_opt;
  if (oracle->parsed()) spec.command = cvqkd::Subcommand::oracle_verify;

  try {
    return cvqkd::run(spec);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
