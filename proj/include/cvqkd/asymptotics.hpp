#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

struct ExpansionResult {
  // First order of the key rate in the transmittance, bits per pulse.
  double key_rate_first_order = 0.0;
  // The expansion parameter g^2 T; the truncation error is of this order
  // relative to the leading term.
  double validity_hint = 0.0;
};

// Strong-loss (T -> 0) first-order key rate.  Exact in the amplifier gain:
// the amplified rate equals 1/g^2 times the unamplified rate at g^2 T when
// the success probability sits at its physical bound.
inline ExpansionResult key_rate_expansion(const ProtocolParams& protocol,
                                          const ChannelParams& channel) {
  protocol.validate();
  channel.validate();
  if (protocol.epr_lambda == 0.0)
    throw domain_error("key_rate_expansion: epr_lambda must be in (0, 1)");
  const double lam = protocol.epr_lambda;
  const double lam2 = lam * lam;
  const double beta = protocol.recon_beta;
  const double eps = channel.excess_noise;
  const double g2t = protocol.gain * protocol.gain * channel.transmittance;

  const double u = lam2 - 1.0;
  double n = -2.0 * beta * lam2 * u + 2.0 * lam2 * std::log(lam2 > 0.0 ? lam2 : 1.0) +
             4.0 * u * lam2 * (lam > 0.0 ? std::log(lam) : 0.0);
  if (eps > 0.0) {
    n += -eps * u * u * (1.0 + std::numbers::ln2) +
         eps * u * u * (std::log(eps) + std::log(g2t));
  }

  const double p = protocol.psuc.probability(protocol.gain);
  ExpansionResult r;
  r.key_rate_first_order = p * g2t * n / (2.0 * u * u * std::numbers::ln2);
  r.validity_hint = g2t;
  return r;
}

// Smallest transmittance with a positive first-order key rate: the
// strong-loss distance limit of the protocol.  Returns 0 when the channel
// has no excess noise (the rate stays positive for arbitrarily small T).
// Values above 1 mean no transmittance gives a positive rate.
inline double transmittance_limit(double epr_lambda, double excess_noise,
                                  double recon_beta, double gain = 1.0) {
  if (!(epr_lambda > 0.0) || epr_lambda >= 1.0)
    throw domain_error("epr_lambda must be in (0, 1)");
  if (!(recon_beta > 0.0) || recon_beta > 1.0)
    throw domain_error("recon_beta must be in (0, 1]");
  if (!(gain >= 1.0)) throw domain_error("gain must be >= 1");
  if (!(excess_noise >= 0.0)) throw domain_error("excess_noise must be >= 0");
  if (excess_noise == 0.0) return 0.0;

  const double lam2 = epr_lambda * epr_lambda;
  const double u = lam2 - 1.0;
  const double eps = excess_noise;
  const double power = -4.0 * lam2 * lam2 / (eps * u * u);
  const double expo = (lam2 * (2.0 * recon_beta + eps) - eps) / (eps * u);
  const double base = 2.0 / eps *
                      (epr_lambda > 0.0 ? std::pow(epr_lambda, power) : 1.0) *
                      std::exp(expo);
  return base / (gain * gain);
}

// Reach extension of the amplifier, in dB of channel loss: 20 log10(g).
inline double loss_shift_db(double gain) {
  if (!(gain >= 1.0)) throw domain_error("gain must be >= 1");
  return 20.0 * std::log10(gain);
}

namespace detail {

// Stationarity function of the strong-loss rate with respect to the source
// strength; the optimum solves stationarity(lambda) = recon_beta,
// independently of T, epsilon and g.
inline double lambda_stationarity(double lam) {
  const double lam2 = lam * lam;
  return lam2 * (lam2 - 4.0 * std::log(lam) - 1.0) / (1.0 - lam2);
}

}  // namespace detail

// Source strength maximizing the strong-loss key rate.  The optimum does
// not depend on the channel or the gain, only on the reconciliation
// efficiency; it approaches 1 as recon_beta approaches 1.
inline double optimal_epr_lambda(double recon_beta) {
  if (!(recon_beta > 0.0) || recon_beta > 1.0)
    throw domain_error("recon_beta must be in (0, 1]");
  // At perfect reconciliation the rate keeps growing all the way to the
  // edge of the source domain; there is no interior optimum to return.
  if (recon_beta == 1.0)
    throw convergence_error(
        "optimal_epr_lambda: optimum not attained at recon_beta = 1");
  double lo = 1e-3;
  double hi = 1.0 - 1e-9;
  if (detail::lambda_stationarity(lo) > recon_beta ||
      detail::lambda_stationarity(hi) < recon_beta)
    throw convergence_error("optimal_epr_lambda: root not bracketed");
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    (detail::lambda_stationarity(mid) < recon_beta ? lo : hi) = mid;
  }
  const double lam = 0.5 * (lo + hi);
  if (std::abs(detail::lambda_stationarity(lam) - recon_beta) > 1e-8)
    throw convergence_error("optimal_epr_lambda: residual above tolerance");
  return lam;
}

}  // namespace cvqkd
