#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cvqkd/asymptotics.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/fock.hpp"
#include "cvqkd/nla.hpp"
#include "cvqkd/optimize.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

enum class Subcommand {
  keyrate,
  effective_params_report,
  sweep_losses,
  contour_noise,
  gain_scan_curve,
  tlim,
  lambda_opt,
  oracle_verify,
};

// One fully-resolved CLI request.  Fields not used by the selected
// subcommand are ignored.
struct SweepSpec {
  Subcommand command = Subcommand::keyrate;

  double epsilon = 0.05;
  double recon_beta = 0.95;
  double gain = 1.0;
  // NaN means "pick automatically" where that is meaningful.
  double epr_lambda = std::numeric_limits<double>::quiet_NaN();
  double losses_db = 10.0;
  // Direct transmittance; NaN means derive from losses_db.
  double transmittance = std::numeric_limits<double>::quiet_NaN();

  double range_start = 0.0;  // dB sweeps
  double range_stop = 30.0;
  double range_step = 0.5;

  double beta_start = 0.85;  // lambda-opt --sweep
  double beta_stop = 0.99;
  double beta_step = 0.01;
  bool beta_sweep = false;

  std::vector<double> gains;  // gain-scan points
  bool gmax_curve = false;

  int dim = 60;  // oracle-verify
  int quadrature_order = 41;

  SuccessModel psuc = SuccessModel::upper_bound();
  int jobs = 0;  // 0: NLA_CVQKD_JOBS env var, then hardware concurrency
  std::string output;  // empty: stdout
};

namespace detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NLA_CVQKD_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

// Evaluates fn(i) for i in [0, n) on `jobs` threads; results land in a
// vector indexed by i, so the output order never depends on scheduling.
template <class Fn>
std::vector<std::string> parallel_rows(int n, int jobs, Fn&& fn) {
  std::vector<std::string> rows(n);
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) rows[i] = fn(i);
    return rows;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          rows[i] = fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

inline std::vector<double> grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw domain_error("sweep step must be positive");
  if (stop < start) throw domain_error("sweep stop must be >= start");
  std::vector<double> xs;
  for (int k = 0;; ++k) {
    const double x = start + k * step;
    if (x > stop + 1e-9 * std::max(1.0, std::abs(stop))) break;
    xs.push_back(x);
  }
  return xs;
}

struct SweepOutput {
  std::ostringstream csv;
  std::string summary;
};

inline void run_keyrate(const SweepSpec& spec, SweepOutput& out) {
  const double lam = std::isnan(spec.epr_lambda) ? 0.5 : spec.epr_lambda;
  const ChannelParams ch{losses_db_to_transmittance(spec.losses_db),
                         spec.epsilon};
  ProtocolParams p;
  p.epr_lambda = lam;
  p.recon_beta = spec.recon_beta;
  p.gain = spec.gain;
  p.psuc = spec.psuc;

  ProtocolParams plain = p;
  plain.gain = 1.0;
  const KeyRateResult base = key_rate(plain, ch);
  const KeyRateResult nla = key_rate_nla(p, ch);

  out.csv << "loss_db,T,lambda,mutual_info,holevo,keyrate_nonla,keyrate_nla\n"
          << fmt(spec.losses_db) << ',' << fmt(ch.transmittance) << ','
          << fmt(lam) << ',' << fmt(nla.mutual_info) << ',' << fmt(nla.holevo)
          << ',' << fmt(base.key_rate) << ',' << fmt(nla.key_rate) << '\n';
  out.summary = "keyrate_nla = " + fmt(nla.key_rate) + " bits per pulse";
}

inline void run_effective_params(const SweepSpec& spec, SweepOutput& out) {
  const double lam = std::isnan(spec.epr_lambda) ? 0.5 : spec.epr_lambda;
  const ChannelParams ch{losses_db_to_transmittance(spec.losses_db),
                         spec.epsilon};
  ProtocolParams p;
  p.epr_lambda = lam;
  p.recon_beta = spec.recon_beta;
  p.gain = spec.gain;
  const EffectiveParams ep = effective_params(p, ch);
  out.csv << "gain,zeta,eta,eps_g,feasible,binding\n"
          << fmt(spec.gain) << ',' << fmt(ep.zeta) << ',' << fmt(ep.eta) << ','
          << fmt(ep.eps_g) << ',' << (ep.feasible ? 1 : 0) << ','
          << to_string(ep.binding) << '\n';
  out.summary = ep.feasible
                    ? "feasible: zeta = " + fmt(ep.zeta) + ", eta = " +
                          fmt(ep.eta) + ", eps_g = " + fmt(ep.eps_g)
                    : std::string("infeasible (binding: ") +
                          to_string(ep.binding) + ")";
}

inline void run_sweep_losses(const SweepSpec& spec, SweepOutput& out) {
  const auto dbs = grid(spec.range_start, spec.range_stop, spec.range_step);
  const int jobs = resolve_jobs(spec.jobs);
  std::vector<double> nonla(dbs.size()), nla(dbs.size());
  const auto rows = parallel_rows(int(dbs.size()), jobs, [&](int i) {
    const double db = dbs[i];
    const ChannelParams ch{losses_db_to_transmittance(db), spec.epsilon};
    const OptimizationReport base =
        optimize_key_rate(ch, spec.recon_beta, 1.0, OptVariable::epr_lambda);
    double amplified = std::numeric_limits<double>::quiet_NaN();
    if (spec.gain > 1.0) {
      try {
        amplified = optimize_key_rate(ch, spec.recon_beta, spec.gain,
                                      OptVariable::zeta, spec.psuc)
                        .max_value;
      } catch (const infeasible_error&) {
      }
    } else {
      amplified = base.max_value;
    }
    nonla[i] = base.max_value;
    nla[i] = amplified;
    return fmt(db) + "," + fmt(ch.transmittance) + "," + fmt(base.argmax) +
           "," + fmt(base.max_value) + "," + fmt(amplified) + "\n";
  });
  out.csv << "loss_db,T,opt_var,keyrate_nonla,keyrate_nla\n";
  for (const auto& r : rows) out.csv << r;

  double last_pos_nonla = -1.0, last_pos_nla = -1.0;
  for (size_t i = 0; i < dbs.size(); ++i) {
    if (nonla[i] > 0.0) last_pos_nonla = dbs[i];
    if (nla[i] > 0.0) last_pos_nla = dbs[i];
  }
  out.summary = "positive rate up to " + fmt(last_pos_nonla) +
                " dB without amplifier, " + fmt(last_pos_nla) +
                " dB with gain " + fmt(spec.gain);
}

inline void run_contour_noise(const SweepSpec& spec, SweepOutput& out) {
  const auto dbs = grid(spec.range_start, spec.range_stop, spec.range_step);
  const int jobs = resolve_jobs(spec.jobs);
  std::vector<double> eps_nla(dbs.size());
  // Rows past the reach of a configuration report NaN instead of aborting
  // the whole sweep.
  const auto tolerable = [&](double db, double g) {
    try {
      return max_excess_noise(db, spec.recon_beta, g);
    } catch (const convergence_error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  const auto rows = parallel_rows(int(dbs.size()), jobs, [&](int i) {
    const double db = dbs[i];
    const double e1 = tolerable(db, 1.0);
    const double eg = spec.gain > 1.0 ? tolerable(db, spec.gain) : e1;
    eps_nla[i] = eg;
    return fmt(db) + "," + fmt(losses_db_to_transmittance(db)) + "," +
           fmt(e1) + "," + fmt(eg) + "\n";
  });
  out.csv << "loss_db,T,eps_max_nonla,eps_max_nla\n";
  for (const auto& r : rows) out.csv << r;
  out.summary = "tolerable noise at " + fmt(dbs.back()) +
                " dB: " + fmt(eps_nla.back()) + " with gain " + fmt(spec.gain);
}

inline void run_gain_scan(const SweepSpec& spec, SweepOutput& out) {
  if (spec.gmax_curve) {
    const auto dbs = grid(spec.range_start, spec.range_stop, spec.range_step);
    const int jobs = resolve_jobs(spec.jobs);
    const auto rows = parallel_rows(int(dbs.size()), jobs, [&](int i) {
      const ChannelParams ch{losses_db_to_transmittance(dbs[i]), spec.epsilon};
      return fmt(dbs[i]) + "," + fmt(ch.transmittance) + "," +
             fmt(max_gain(ch)) + "\n";
    });
    out.csv << "loss_db,T,g_max\n";
    for (const auto& r : rows) out.csv << r;
    const ChannelParams last{losses_db_to_transmittance(dbs.back()),
                             spec.epsilon};
    out.summary = "g_max at " + fmt(dbs.back()) + " dB = " +
                  fmt(max_gain(last));
    return;
  }
  std::vector<double> gains = spec.gains;
  if (gains.empty())
    for (double g = 1.0; g <= 10.0 + 1e-9; g += 0.5) gains.push_back(g);
  const auto points =
      gain_scan(spec.losses_db, spec.epsilon, spec.recon_beta, gains, spec.psuc);
  out.csv << "gain,keyrate,feasible\n";
  const GainScanPoint* best = nullptr;
  for (const auto& pt : points) {
    out.csv << fmt(pt.gain) << ',' << fmt(pt.key_rate) << ','
            << (pt.feasible ? 1 : 0) << '\n';
    if (pt.feasible && (!best || pt.key_rate > best->key_rate)) best = &pt;
  }
  out.summary = best ? "best gain " + fmt(best->gain) + " with rate " +
                           fmt(best->key_rate)
                     : std::string("no feasible gain in scan");
}

inline void run_tlim(const SweepSpec& spec, SweepOutput& out) {
  const double lam = std::isnan(spec.epr_lambda)
                         ? optimal_epr_lambda(spec.recon_beta)
                         : spec.epr_lambda;
  const double tl =
      transmittance_limit(lam, spec.epsilon, spec.recon_beta, spec.gain);
  const double db = tl > 0.0 ? transmittance_to_losses_db(tl)
                             : std::numeric_limits<double>::infinity();
  out.csv << "lambda,epsilon,beta,gain,t_lim,loss_db\n"
          << fmt(lam) << ',' << fmt(spec.epsilon) << ',' << fmt(spec.recon_beta)
          << ',' << fmt(spec.gain) << ',' << fmt(tl) << ',' << fmt(db) << '\n';
  out.summary = "t_lim = " + fmt(tl) + " (" + fmt(db) + " dB)";
}

inline void run_lambda_opt(const SweepSpec& spec, SweepOutput& out) {
  out.csv << "beta,lambda_opt\n";
  if (spec.beta_sweep) {
    const auto betas = grid(spec.beta_start, spec.beta_stop, spec.beta_step);
    for (double b : betas) {
      double lam = std::numeric_limits<double>::quiet_NaN();
      try {
        lam = optimal_epr_lambda(b);
      } catch (const convergence_error&) {
        // beta = 1 has no attained optimum; report the row as nan like
        // the other sweeps do for unreachable entries.
      }
      out.csv << fmt(b) << ',' << fmt(lam) << '\n';
    }
    out.summary = "lambda_opt over beta in [" + fmt(spec.beta_start) + ", " +
                  fmt(spec.beta_stop) + "]";
    return;
  }
  const double lam = optimal_epr_lambda(spec.recon_beta);
  out.csv << fmt(spec.recon_beta) << ',' << fmt(lam) << '\n';
  out.summary = "lambda_opt(" + fmt(spec.recon_beta) + ") = " + fmt(lam);
}

inline void run_oracle_verify(const SweepSpec& spec, SweepOutput& out) {
  const double lam = std::isnan(spec.epr_lambda) ? 0.3 : spec.epr_lambda;
  const double t = std::isnan(spec.transmittance)
                       ? losses_db_to_transmittance(spec.losses_db)
                       : spec.transmittance;
  const ChannelParams ch{t, spec.epsilon};
  ProtocolParams p;
  p.epr_lambda = lam;
  p.recon_beta = spec.recon_beta;
  p.gain = spec.gain;
  const double dev =
      verify_equivalent_channel(p, ch, spec.dim, spec.quadrature_order);
  out.csv << "lambda,T,epsilon,gain,dim,quadrature_order,max_deviation\n"
          << fmt(lam) << ',' << fmt(ch.transmittance) << ','
          << fmt(spec.epsilon) << ',' << fmt(spec.gain) << ',' << spec.dim
          << ',' << spec.quadrature_order << ',' << fmt(dev) << '\n';
  out.summary = "max deviation = " + fmt(dev) + " at dim " +
                std::to_string(spec.dim);
}

}  // namespace detail

// Executes one resolved request.  CSV rows go to spec.output (or to `out`
// when no file is named); the one-line summary always goes to `out`, after
// the rows.  Returns a process exit status: 0 success, 3
// domain/infeasibility/truncation error, 4 convergence failure, 5 output
// file not writable.
inline int run(const SweepSpec& spec, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  detail::SweepOutput result;
  try {
    switch (spec.command) {
      case Subcommand::keyrate: detail::run_keyrate(spec, result); break;
      case Subcommand::effective_params_report:
        detail::run_effective_params(spec, result);
        break;
      case Subcommand::sweep_losses:
        detail::run_sweep_losses(spec, result);
        break;
      case Subcommand::contour_noise:
        detail::run_contour_noise(spec, result);
        break;
      case Subcommand::gain_scan_curve:
        detail::run_gain_scan(spec, result);
        break;
      case Subcommand::tlim: detail::run_tlim(spec, result); break;
      case Subcommand::lambda_opt: detail::run_lambda_opt(spec, result); break;
      case Subcommand::oracle_verify:
        detail::run_oracle_verify(spec, result);
        break;
    }
  } catch (const convergence_error& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const infeasible_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const truncation_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const physicality_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }

  if (spec.output.empty()) {
    out << result.csv.str();
  } else {
    std::ofstream file(spec.output);
    if (!file) {
      err << "error: cannot open output file " << spec.output << '\n';
      return 5;
    }
    file << result.csv.str();
  }
  out << result.summary << '\n';
  return 0;
}

}  // namespace cvqkd
