#pragma once

#include <cmath>
#include <string>

#include "cvqkd/errors.hpp"

namespace cvqkd {

// Gaussian channel between Alice and Bob.  Units are shot-noise units
// throughout: the vacuum quadrature variance is 1.
struct ChannelParams {
  double transmittance = 1.0;  // T in (0, 1]
  double excess_noise = 0.0;   // epsilon, input-referred, >= 0

  // Loss-equivalent input noise (1-T)/T added by a purely lossy channel.
  double loss_noise() const { return (1.0 - transmittance) / transmittance; }

  // Total input-referred noise seen by Bob beyond the signal itself.
  double total_noise() const { return loss_noise() + excess_noise; }

  void validate() const {
    if (!(transmittance > 0.0) || transmittance > 1.0)
      throw domain_error("transmittance must be in (0, 1], got " +
                         std::to_string(transmittance));
    if (!(excess_noise >= 0.0))
      throw domain_error("excess_noise must be >= 0, got " +
                         std::to_string(excess_noise));
  }
};

// Success-probability model for the probabilistic amplifier.  The physical
// bound is P <= 1/g^2; a fixed value can be substituted to model a concrete
// implementation.  Key-rate signs and optimizer results never depend on the
// choice because the factor is positive and constant in the search variable.
struct SuccessModel {
  static SuccessModel upper_bound() { return SuccessModel{true, 0.0}; }
  static SuccessModel constant(double p) {
    if (!(p > 0.0) || p > 1.0)
      throw domain_error("success probability must be in (0, 1], got " +
                         std::to_string(p));
    return SuccessModel{false, p};
  }

  double probability(double gain) const {
    return is_upper_bound ? 1.0 / (gain * gain) : value;
  }

  bool is_upper_bound = true;
  double value = 0.0;
};

// Protocol-side knobs: the entanglement-based source strength, the
// reconciliation efficiency, and the amplifier gain (1 = no amplifier).
struct ProtocolParams {
  double epr_lambda = 0.5;   // two-mode squeezing parameter, in [0, 1)
  double recon_beta = 0.95;  // reconciliation efficiency, in (0, 1]
  double gain = 1.0;         // amplifier gain g >= 1
  SuccessModel psuc = SuccessModel::upper_bound();

  // Quadrature variance V of each half of the two-mode squeezed state.
  double modulation_variance() const {
    const double l2 = epr_lambda * epr_lambda;
    return (1.0 + l2) / (1.0 - l2);
  }

  void validate() const {
    if (!(epr_lambda >= 0.0) || epr_lambda >= 1.0)
      throw domain_error("epr_lambda must be in [0, 1), got " +
                         std::to_string(epr_lambda));
    if (!(recon_beta > 0.0) || recon_beta > 1.0)
      throw domain_error("recon_beta must be in (0, 1], got " +
                         std::to_string(recon_beta));
    if (!(gain >= 1.0))
      throw domain_error("gain must be >= 1, got " + std::to_string(gain));
  }
};

// Channel losses in dB <-> transmittance.
inline double losses_db_to_transmittance(double db) {
  return std::pow(10.0, -db / 10.0);
}

inline double transmittance_to_losses_db(double t) {
  if (!(t > 0.0)) throw domain_error("transmittance must be positive");
  return -10.0 * std::log10(t);
}

}  // namespace cvqkd
