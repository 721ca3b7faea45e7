#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

namespace detail {

// Radicands may dip just below zero through rounding.  Values within a
// relative tolerance are clamped to zero; anything further below is a
// genuine physicality violation and is reported as such.
inline double clamp_radicand(double x, double scale, const char* where) {
  const double tol = 1e-12 * std::max(1.0, scale);
  if (x < -tol)
    throw physicality_error(std::string(where) + ": negative radicand " +
                            std::to_string(x));
  return std::max(x, 0.0);
}

// Symplectic eigenvalues must satisfy nu >= 1.  Rounding can land slightly
// below; clamp within 1e-6, reject anything worse.
inline double clamp_symplectic(double nu, const char* where) {
  if (nu >= 1.0) return nu;
  if (nu >= 1.0 - 1e-6) return 1.0;
  throw physicality_error(std::string(where) + ": symplectic eigenvalue " +
                          std::to_string(nu) + " < 1");
}

}  // namespace detail

// Von Neumann entropy, in bits, of a thermal state with mean photon
// number x: (x+1) log2(x+1) - x log2(x).  Extends continuously to 0 at 0.
inline double thermal_entropy(double x) {
  if (x < 0.0) {
    if (x < -1e-12)
      throw domain_error("thermal_entropy: mean photon number " +
                         std::to_string(x) + " < 0");
    x = 0.0;
  }
  if (x == 0.0) return 0.0;
  constexpr double inv_ln2 = 1.0 / std::numbers::ln2;
  return (x + 1.0) * std::log1p(x) * inv_ln2 - x * std::log2(x);
}

// Two-mode covariance matrix in block form
//   [ a I    c Z ]
//   [ c Z    b I ],   Z = diag(1, -1),
// which covers every state this library produces.
struct TwoModeCovariance {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;

  // Symplectic eigenvalues {nu_minus, nu_plus} of the joint state.
  std::array<double, 2> symplectic_eigenvalues() const {
    const double delta = a * a + b * b - 2.0 * c * c;
    const double det = (a * b - c * c) * (a * b - c * c);
    const double root = std::sqrt(
        detail::clamp_radicand(delta * delta - 4.0 * det, delta * delta,
                               "symplectic_eigenvalues"));
    const double nu_plus2 = 0.5 * (delta + root);
    if (!(nu_plus2 > 0.0))
      throw physicality_error("symplectic_eigenvalues: matrix not positive");
    // The product of the squared eigenvalues equals det; dividing avoids
    // the cancellation in (delta - root) / 2.
    const double nu_minus2 = det / nu_plus2;
    return {std::sqrt(std::max(nu_minus2, 0.0)), std::sqrt(nu_plus2)};
  }

  // Conditional eigenvalue of Alice's mode after Bob's homodyne detection.
  double conditional_eigenvalue() const {
    if (!(b > 0.0)) throw domain_error("conditional_eigenvalue: b must be > 0");
    const double rad = detail::clamp_radicand(a * (a - c * c / b), a * a,
                                              "conditional_eigenvalue");
    return std::sqrt(rad);
  }

  bool is_physical(double tol = 1e-9) const {
    const auto nu = symplectic_eigenvalues();
    return nu[0] >= 1.0 - tol && nu[1] >= 1.0 - tol;
  }
};

// Covariance matrix shared by Alice and Bob after the signal half of a
// two-mode squeezed state crosses the channel:
//   a = V,  b = T (V + total noise),  c = sqrt(T (V^2 - 1)).
inline TwoModeCovariance build_covariance(const ProtocolParams& protocol,
                                          const ChannelParams& channel) {
  protocol.validate();
  channel.validate();
  const double v = protocol.modulation_variance();
  const double t = channel.transmittance;
  TwoModeCovariance cov;
  cov.a = v;
  cov.b = t * (v + channel.total_noise());
  cov.c = std::sqrt(t * (v * v - 1.0));
  return cov;
}

// Shannon mutual information, in bits per pulse, between Alice's and Bob's
// heterodyne/homodyne outcomes for one quadrature.
inline double mutual_information(const ProtocolParams& protocol,
                                 const ChannelParams& channel) {
  protocol.validate();
  channel.validate();
  const double v = protocol.modulation_variance();
  const double chi = channel.total_noise();
  return 0.5 * std::log2((v + chi) / (1.0 + chi));
}

// Holevo bound, in bits per pulse, on Eve's information about Bob's
// homodyne outcome, for a collective Gaussian attack purifying the channel.
inline double holevo_bound(const ProtocolParams& protocol,
                           const ChannelParams& channel) {
  protocol.validate();
  channel.validate();
  const double v = protocol.modulation_variance();
  const double t = channel.transmittance;
  const double chi = channel.total_noise();
  const double tv = t * (v + chi);  // Bob's variance, > 0

  // Grouped so every term is nonnegative for t <= 1; the textbook form
  // v^2 (1 - 2t) + (tv)^2 cancels catastrophically near t = 1.
  const double big_a = v * v * (1.0 - t) * (1.0 - t) + 2.0 * t +
                       t * t * chi * (2.0 * v + chi);
  const double se = t * (v * chi + 1.0);  // sqrt(E); positive
  const double big_e = se * se;

  double rad = detail::clamp_radicand(big_a * big_a - 4.0 * big_e,
                                      big_a * big_a, "holevo_bound");
  const double mu1_sq = 0.5 * (big_a + std::sqrt(rad));
  const double mu2_sq = big_e / mu1_sq;

  const double big_c = (v * se + tv) / tv;
  const double big_d = se * v / tv;
  rad = detail::clamp_radicand(big_c * big_c - 4.0 * big_d, big_c * big_c,
                               "holevo_bound");
  const double mu3_sq = 0.5 * (big_c + std::sqrt(rad));
  const double mu4_sq = big_d / mu3_sq;

  const double mu1 = detail::clamp_symplectic(std::sqrt(mu1_sq), "holevo_bound");
  const double mu2 = detail::clamp_symplectic(std::sqrt(mu2_sq), "holevo_bound");
  const double mu3 = detail::clamp_symplectic(std::sqrt(mu3_sq), "holevo_bound");
  const double mu4 = detail::clamp_symplectic(std::sqrt(mu4_sq), "holevo_bound");

  return thermal_entropy(0.5 * (mu1 - 1.0)) + thermal_entropy(0.5 * (mu2 - 1.0)) -
         thermal_entropy(0.5 * (mu3 - 1.0)) - thermal_entropy(0.5 * (mu4 - 1.0));
}

struct KeyRateResult {
  double mutual_info = 0.0;
  double holevo = 0.0;
  double key_rate = 0.0;
};

// Asymptotic reverse-reconciliation key rate beta * I_AB - chi_BE in bits
// per pulse, without an amplifier.  Negative values mean no key.
inline KeyRateResult key_rate(const ProtocolParams& protocol,
                              const ChannelParams& channel) {
  KeyRateResult r;
  r.mutual_info = mutual_information(protocol, channel);
  r.holevo = holevo_bound(protocol, channel);
  r.key_rate = protocol.recon_beta * r.mutual_info - r.holevo;
  return r;
}

}  // namespace cvqkd
