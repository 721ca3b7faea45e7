#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/nla.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

struct OptimizationReport {
  double argmax = 0.0;
  double max_value = 0.0;
  int evaluations = 0;
  bool converged = false;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool at_boundary = false;  // optimum pinned to an edge of the search box
  bool multimodal = false;   // coarse scan saw more than one local maximum
};

// Maximizes a unimodal-ish scalar function on [lo, hi]: a fixed coarse scan
// locates the best cell, golden-section refines it.  The coarse scan also
// flags additional local maxima.
template <class F>
OptimizationReport golden_section_max(F&& f, double lo, double hi,
                                      int coarse_points = 64,
                                      double tol = 1e-8,
                                      int max_iterations = 200) {
  if (!(hi > lo)) throw domain_error("golden_section_max: empty interval");
  OptimizationReport rep;

  std::vector<double> xs(coarse_points), fs(coarse_points);
  int best = 0;
  for (int i = 0; i < coarse_points; ++i) {
    xs[i] = lo + (hi - lo) * i / (coarse_points - 1);
    fs[i] = f(xs[i]);
    ++rep.evaluations;
    if (fs[i] > fs[best]) best = i;
  }
  int peaks = 0;
  for (int i = 0; i < coarse_points; ++i) {
    const bool up = i == 0 || fs[i] >= fs[i - 1];
    const bool down = i == coarse_points - 1 || fs[i] >= fs[i + 1];
    if (up && down) ++peaks;
  }
  rep.multimodal = peaks > 1;

  double a = xs[std::max(best - 1, 0)];
  double b = xs[std::min(best + 1, coarse_points - 1)];
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = f(c), fd = f(d);
  rep.evaluations += 2;
  for (int it = 0; it < max_iterations && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = f(d);
    }
    ++rep.evaluations;
  }
  rep.converged = (b - a) <= tol;
  rep.bracket_lo = a;
  rep.bracket_hi = b;
  if (fc > fd) {
    rep.argmax = c;
    rep.max_value = fc;
  } else {
    rep.argmax = d;
    rep.max_value = fd;
  }
  rep.at_boundary =
      rep.argmax - lo < 1e-6 * (hi - lo) || hi - rep.argmax < 1e-6 * (hi - lo);
  return rep;
}

enum class OptVariable {
  epr_lambda,  // optimize the physical source strength lambda
  zeta,        // optimize the effective source strength directly
};

namespace detail {

// Unscaled (success probability left out) amplified key rate as a function
// of the effective source strength zeta.  eta and eps_g do not depend on
// the source, so they are fixed per (channel, gain).
struct EffectiveRate {
  ChannelParams eff_channel;
  double recon_beta;

  double operator()(double zeta) const {
    ProtocolParams p;
    p.epr_lambda = zeta;
    p.recon_beta = recon_beta;
    return key_rate(p, eff_channel).key_rate;
  }
};

inline ChannelParams effective_channel_for(const ChannelParams& channel,
                                           double gain, double recon_beta) {
  ProtocolParams probe;
  probe.epr_lambda = 0.0;
  probe.recon_beta = recon_beta;
  probe.gain = gain;
  const EffectiveParams ep = effective_params(probe, channel);
  if (!ep.feasible)
    throw infeasible_error("optimizer: operating point infeasible", ep.binding);
  return ep.as_channel();
}

}  // namespace detail

// Maximizes the key rate over the source strength at fixed channel, gain
// and reconciliation efficiency.  `argmax` is expressed in the chosen
// search variable.  max_value includes the success-probability factor; the
// argmax never depends on the success model because that factor is a
// positive constant in the search variable.
inline OptimizationReport optimize_key_rate(
    const ChannelParams& channel, double recon_beta, double gain = 1.0,
    OptVariable variable = OptVariable::zeta,
    const SuccessModel& psuc = SuccessModel::upper_bound()) {
  channel.validate();
  if (!(recon_beta > 0.0) || recon_beta > 1.0)
    throw domain_error("recon_beta must be in (0, 1]");
  if (!(gain >= 1.0)) throw domain_error("gain must be >= 1");

  OptimizationReport rep;
  if (variable == OptVariable::zeta || gain == 1.0) {
    const detail::EffectiveRate f{
        detail::effective_channel_for(channel, gain, recon_beta), recon_beta};
    rep = golden_section_max(f, 1e-6, 1.0 - 1e-6);
  } else {
    const double cap =
        std::min(epr_lambda_limit(channel, gain) * (1.0 - 1e-9), 1.0 - 1e-6);
    ProtocolParams p;
    p.recon_beta = recon_beta;
    p.gain = gain;
    auto f = [&](double lam) {
      ProtocolParams q = p;
      q.epr_lambda = lam;
      const EffectiveParams ep = effective_params(q, channel);
      if (!ep.feasible)
        throw infeasible_error("optimizer: infeasible inside search box",
                               ep.binding);
      return key_rate(ep.as_protocol(q), ep.as_channel()).key_rate;
    };
    rep = golden_section_max(f, 1e-6, cap);
  }
  rep.max_value *= psuc.probability(gain);
  return rep;
}

struct LossLimitOptions {
  double max_db = 60.0;        // upper end of the scanned loss range
  double coarse_step_db = 0.5; // scan step used to bracket the crossing
  double rate_tol = 1e-8;      // |optimized rate| at the returned point
  double db_tol = 1e-10;       // bisection width floor
};

// Largest channel loss, in dB, at which the source-optimized key rate is
// still positive.  The success model is accepted for interface symmetry but
// never consumed: a positive constant factor cannot move a zero crossing,
// so the result is bitwise independent of it.
inline double find_loss_limit(double excess_noise, double recon_beta,
                              double gain = 1.0,
                              const LossLimitOptions& opts = {},
                              const SuccessModel& = SuccessModel::upper_bound()) {
  if (!(excess_noise >= 0.0)) throw domain_error("excess_noise must be >= 0");
  auto rate_at = [&](double db) -> double {
    const ChannelParams ch{losses_db_to_transmittance(db), excess_noise};
    return optimize_key_rate(ch, recon_beta, gain).max_value *
           (gain * gain);  // undo the default success factor
  };

  // Bracket the last positive-to-negative crossing.  Points with the
  // amplifier infeasible (too little loss for the requested gain) are
  // skipped.
  bool have_pos = false;
  double db_pos = 0.0;
  double db_neg = std::numeric_limits<double>::quiet_NaN();
  for (double db = 0.0; db <= opts.max_db + 1e-12; db += opts.coarse_step_db) {
    double r;
    try {
      r = rate_at(db);
    } catch (const infeasible_error&) {
      continue;
    }
    if (r > 0.0) {
      have_pos = true;
      db_pos = db;
      db_neg = std::numeric_limits<double>::quiet_NaN();
    } else if (have_pos && std::isnan(db_neg)) {
      db_neg = db;
    }
  }
  if (!have_pos)
    throw convergence_error("find_loss_limit: no positive rate in range");
  if (std::isnan(db_neg))
    throw convergence_error(
        "find_loss_limit: rate still positive at max_db; no crossing");

  double lo = db_pos, hi = db_neg;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = rate_at(mid);
    if (std::abs(r) < opts.rate_tol) return mid;
    (r > 0.0 ? lo : hi) = mid;
    if (hi - lo < opts.db_tol) break;
  }
  const double r = rate_at(mid);
  if (std::abs(r) >= opts.rate_tol)
    throw convergence_error("find_loss_limit: crossing not resolved");
  return mid;
}

// Largest excess noise in (0, 2) tolerating a positive source-optimized
// key rate at the given loss.  The success model is accepted but never
// consumed, for the same reason as in find_loss_limit.
inline double max_excess_noise(double losses_db, double recon_beta,
                               double gain = 1.0,
                               const SuccessModel& = SuccessModel::upper_bound()) {
  const double t = losses_db_to_transmittance(losses_db);
  auto rate_at = [&](double eps) -> double {
    const ChannelParams ch{t, eps};
    try {
      return optimize_key_rate(ch, recon_beta, gain).max_value;
    } catch (const infeasible_error&) {
      return -1.0;  // beyond the amplifier's feasible region: no key
    }
  };
  double lo = 1e-9;
  double hi = 2.0 - 1e-9;
  if (rate_at(lo) <= 0.0)
    throw convergence_error(
        "max_excess_noise: no positive rate even at vanishing noise");
  if (rate_at(hi) > 0.0)
    throw convergence_error("max_excess_noise: rate positive at eps -> 2");
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (rate_at(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct GainScanPoint {
  double gain = 1.0;
  double key_rate = 0.0;
  bool feasible = false;
};

// Source-optimized key rate as a function of the amplifier gain at a fixed
// channel.  Infeasible gains are reported rather than skipped.
inline std::vector<GainScanPoint> gain_scan(
    double losses_db, double excess_noise, double recon_beta,
    std::span<const double> gains,
    const SuccessModel& psuc = SuccessModel::upper_bound()) {
  const ChannelParams channel{losses_db_to_transmittance(losses_db),
                              excess_noise};
  std::vector<GainScanPoint> out;
  out.reserve(gains.size());
  for (double g : gains) {
    GainScanPoint pt;
    pt.gain = g;
    try {
      pt.key_rate = optimize_key_rate(channel, recon_beta, g,
                                      OptVariable::zeta, psuc)
                        .max_value;
      pt.feasible = true;
    } catch (const infeasible_error&) {
      pt.key_rate = std::numeric_limits<double>::quiet_NaN();
      pt.feasible = false;
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace cvqkd
