#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

// Parameters of the equivalent unamplified protocol that reproduces the
// statistics of the amplified one: source strength zeta, channel
// transmittance eta, and channel excess noise eps_g.
struct EffectiveParams {
  double zeta = 0.0;
  double eta = 0.0;
  double eps_g = 0.0;
  bool feasible = false;
  binding_constraint binding = binding_constraint::none;

  ProtocolParams as_protocol(const ProtocolParams& base) const {
    ProtocolParams p = base;
    p.epr_lambda = zeta;
    p.gain = 1.0;
    return p;
  }
  ChannelParams as_channel() const { return ChannelParams{eta, eps_g}; }
};

// Maps (lambda, T, epsilon, g) to the equivalent unamplified parameters
// (zeta, eta, eps_g).  At g = 1 the map is the identity.  When the
// requested point is unusable, `feasible` is false and `binding` names the
// first violated constraint in the order: gain_cutoff, eta_gt_one,
// eps_negative, zeta_ge_one.
inline EffectiveParams effective_params(const ProtocolParams& protocol,
                                        const ChannelParams& channel) {
  protocol.validate();
  channel.validate();
  if (channel.excess_noise >= 2.0)
    throw domain_error("effective_params: excess_noise must be < 2");
  const double lam = protocol.epr_lambda;
  const double g = protocol.gain;
  const double t = channel.transmittance;
  const double eps = channel.excess_noise;
  const double w = g * g - 1.0;

  EffectiveParams out;
  const double zeta_den = w * eps * t - 2.0;  // >= 0 iff g*lambda_ch >= 1
  if (zeta_den >= 0.0) {
    out.binding = binding_constraint::gain_cutoff;
    return out;
  }

  const double g2t = g * g * t;
  const double eta_den =
      w * t * (0.25 * w * (eps - 2.0) * eps * t - eps + 1.0) + 1.0;
  if (g2t > eta_den) {
    out.binding = binding_constraint::eta_gt_one;
    return out;
  }

  const double eps_g = eps - 0.5 * w * (eps - 2.0) * eps * t;
  if (eps_g < 0.0) {
    out.binding = binding_constraint::eps_negative;
    return out;
  }

  const double zeta = lam * std::sqrt((w * (eps - 2.0) * t - 2.0) / zeta_den);
  if (zeta >= 1.0) {
    out.binding = binding_constraint::zeta_ge_one;
    return out;
  }

  out.zeta = zeta;
  out.eta = g2t / eta_den;
  out.eps_g = eps_g;
  out.feasible = true;
  return out;
}

// Largest source strength lambda for which the effective source parameter
// zeta stays below 1 at the given gain.
inline double epr_lambda_limit(const ChannelParams& channel, double gain) {
  channel.validate();
  if (channel.excess_noise >= 2.0)
    throw domain_error("epr_lambda_limit: excess_noise must be < 2");
  if (!(gain >= 1.0)) throw domain_error("gain must be >= 1");
  const double w = gain * gain - 1.0;
  const double t = channel.transmittance;
  const double eps = channel.excess_noise;
  const double den = w * eps * t - 2.0;
  if (den >= 0.0)
    throw infeasible_error("epr_lambda_limit: amplified state diverges",
                           binding_constraint::gain_cutoff);
  return std::sqrt(den / (w * (eps - 2.0) * t - 2.0));
}

// Largest gain for which the effective transmittance stays at or below 1.
// Returns +infinity when the channel has no excess noise (no finite bound).
inline double max_gain(const ChannelParams& channel) {
  channel.validate();
  const double t = channel.transmittance;
  const double eps = channel.excess_noise;
  if (eps >= 2.0) throw domain_error("max_gain: excess_noise must be < 2");
  if (eps == 0.0) return std::numeric_limits<double>::infinity();
  const double em2 = eps - 2.0;
  const double num = eps * (t * (eps - 4.0) + 2.0) +
                     4.0 * std::sqrt((t * em2 + 2.0) / eps) -
                     2.0 * std::sqrt(eps * (t * em2 + 2.0)) + 4.0 * t - 4.0;
  const double g2 = num / (t * em2 * em2);
  if (!(g2 >= 1.0))
    throw domain_error("max_gain: no gain above 1 satisfies eta <= 1");
  return std::sqrt(g2);
}

// Physical upper bound 1/g^2 on the amplifier's success probability.
inline double success_probability_bound(double gain) {
  if (!(gain >= 1.0)) throw domain_error("gain must be >= 1");
  return 1.0 / (gain * gain);
}

// Key rate of the amplified protocol in bits per emitted pulse: the rate of
// the equivalent unamplified protocol times the success probability.  The
// mutual_info and holevo fields carry the same per-pulse weighting so that
// key_rate == recon_beta * mutual_info - holevo still holds.
inline KeyRateResult key_rate_nla(const ProtocolParams& protocol,
                                  const ChannelParams& channel) {
  const EffectiveParams ep = effective_params(protocol, channel);
  if (!ep.feasible)
    throw infeasible_error("key_rate_nla: operating point infeasible",
                           ep.binding);
  KeyRateResult r = key_rate(ep.as_protocol(protocol), ep.as_channel());
  const double p = protocol.psuc.probability(protocol.gain);
  r.mutual_info *= p;
  r.holevo *= p;
  r.key_rate *= p;
  return r;
}

// Auxiliary amplifier quantities: the channel-noise parameter lambda_ch
// whose thermal state the amplifier acts on, the source-plus-channel
// parameter lambda_star, and the effective coherent-state gain g_tilde.
struct NlaAuxiliaries {
  double lambda_ch = 0.0;
  double lambda_star = 0.0;
  double g_tilde = 1.0;
};

inline NlaAuxiliaries nla_auxiliaries(const ProtocolParams& protocol,
                                      const ChannelParams& channel) {
  protocol.validate();
  channel.validate();
  const double lam2 = protocol.epr_lambda * protocol.epr_lambda;
  const double t = channel.transmittance;
  const double eps = channel.excess_noise;
  const double g = protocol.gain;

  NlaAuxiliaries aux;
  const double lch2 = t * eps / (2.0 + t * eps);
  const double lstar2 = t * (lam2 * (2.0 - eps) + eps) /
                        (2.0 - lam2 * (2.0 + t * (eps - 2.0)) + t * eps);
  aux.lambda_ch = std::sqrt(lch2);
  aux.lambda_star = std::sqrt(lstar2);
  if (g * g * lch2 >= 1.0 || g * g * lstar2 >= 1.0)
    throw infeasible_error("nla_auxiliaries: amplified thermal state diverges",
                           binding_constraint::gain_cutoff);
  aux.g_tilde = g * (1.0 - lch2) / (1.0 - g * g * lch2);
  return aux;
}

}  // namespace cvqkd
