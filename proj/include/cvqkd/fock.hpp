#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/nla.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/quadrature.hpp"

namespace cvqkd {

// Density matrix truncated to the first `dim` Fock states, normalized to
// unit trace up to the truncation loss.  trace_deficit estimates the mass
// lost to the cutoff.
struct TruncatedState {
  int dim = 0;
  Eigen::MatrixXcd matrix;
  double trace_deficit = 0.0;
};

struct MomentSummary {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;
  double cov_xp = 0.0;
  double trace = 0.0;
};

// Displacement operator exp(beta a^dag - beta^* a) on the truncated space.
// The normal-ordered factorization exp(beta a^dag) exp(-beta^* a) gives two
// triangular factors whose truncated product is exact on the block: the
// matrix elements <m|D|n> involve only finitely many ladder terms.
inline Eigen::MatrixXcd displacement_operator(std::complex<double> beta,
                                              int dim) {
  if (dim < 1) throw domain_error("displacement_operator: dim must be >= 1");
  using Mat = Eigen::MatrixXcd;
  Mat raise = Mat::Identity(dim, dim);  // exp(beta a^dag), lower triangular
  for (int n = 0; n < dim; ++n)
    for (int m = n + 1; m < dim; ++m)
      raise(m, n) = raise(m - 1, n) * beta * std::sqrt(double(m)) / double(m - n);
  Mat lower = Mat::Identity(dim, dim);  // exp(-beta^* a), upper triangular
  const std::complex<double> nb = -std::conj(beta);
  for (int m = 0; m < dim; ++m)
    for (int n = m + 1; n < dim; ++n)
      lower(m, n) = lower(m, n - 1) * nb * std::sqrt(double(n)) / double(n - m);
  return std::exp(-0.5 * std::norm(beta)) * (raise * lower).eval();
}

// Displaced thermal state D(beta) rho_th D(beta)^dag with thermal
// distribution (1 - lambda^2) lambda^(2n), beta = beta_x + i beta_y.
// lambda_th = 0 gives a coherent state.  Throws when the cutoff leaves
// more than max_deficit of the mass outside the block; pass +infinity to
// skip the check (used internally when the truncation error is itself the
// quantity of interest).
inline TruncatedState make_displaced_thermal(double lambda_th, double beta_x,
                                             double beta_y, int dim,
                                             double max_deficit = 1e-10) {
  if (!(lambda_th >= 0.0) || lambda_th >= 1.0)
    throw domain_error("make_displaced_thermal: lambda_th must be in [0, 1)");
  if (dim < 2) throw domain_error("make_displaced_thermal: dim must be >= 2");

  Eigen::MatrixXcd disp =
      displacement_operator(std::complex<double>(beta_x, beta_y), dim);
  Eigen::MatrixXcd scaled = disp;
  const double l2 = lambda_th * lambda_th;
  double occ = 1.0 - l2;
  for (int n = 0; n < dim; ++n) {
    scaled.col(n) *= occ;
    occ *= l2;
  }
  TruncatedState state;
  state.dim = dim;
  state.matrix = scaled * disp.adjoint();
  state.matrix = 0.5 * (state.matrix + state.matrix.adjoint()).eval();
  state.trace_deficit = 1.0 - state.matrix.trace().real();
  if (state.trace_deficit > max_deficit)
    throw truncation_error("make_displaced_thermal: trace deficit " +
                           std::to_string(state.trace_deficit) +
                           " exceeds threshold");
  return state;
}

// Relative success weight of the amplifier filter on a state: the trace of
// g^n rho g^n, i.e. sum_n g^(2n) rho_nn (unit weight at g = 1).
inline double success_weight(const TruncatedState& state, double gain) {
  if (!(gain >= 1.0)) throw domain_error("success_weight: gain must be >= 1");
  double w = 0.0, p = 1.0;
  for (int n = 0; n < state.dim; ++n) {
    w += p * state.matrix(n, n).real();
    p *= gain * gain;
  }
  return w;
}

// Noiseless-amplifier filter g^n applied from both sides, renormalized to
// unit trace (the heralded post-selection outcome).  A geometric estimate
// of the diagonal tail guards the cutoff: a non-decaying amplified tail
// means g lambda >= 1 and the amplified state does not exist.
inline TruncatedState apply_nla(const TruncatedState& state, double gain,
                                double max_tail = 1e-8) {
  if (!(gain >= 1.0)) throw domain_error("apply_nla: gain must be >= 1");
  const int d = state.dim;
  Eigen::VectorXd boost(d);
  double p = 1.0;
  for (int n = 0; n < d; ++n) {
    boost(n) = p;
    p *= gain;
  }
  TruncatedState out;
  out.dim = d;
  out.matrix = boost.asDiagonal() * state.matrix * boost.asDiagonal();

  const double trace = out.matrix.trace().real();
  if (!(trace > 0.0))
    throw domain_error("apply_nla: amplified state has nonpositive trace");
  if (d >= 2) {
    const double p1 = state.matrix(d - 1, d - 1).real();
    const double p0 = state.matrix(d - 2, d - 2).real();
    if (p1 > 0.0 && p0 > 0.0) {
      const double ratio = gain * gain * p1 / p0;
      if (ratio >= 1.0)
        throw infeasible_error("apply_nla: amplified tail does not decay",
                               binding_constraint::gain_cutoff);
      const double tail =
          boost(d - 1) * boost(d - 1) * p1 * ratio / (1.0 - ratio);
      out.trace_deficit = tail / (trace + tail);
      if (out.trace_deficit > max_tail)
        throw truncation_error("apply_nla: estimated truncated mass " +
                               std::to_string(out.trace_deficit) +
                               " of trace exceeds threshold");
    }
  }
  out.matrix /= trace;
  return out;
}

// First and second quadrature moments of x = a + a^dag, p = -i (a - a^dag),
// normalized by the state's trace.
inline MomentSummary moments(const TruncatedState& state) {
  const auto& rho = state.matrix;
  const int d = state.dim;
  std::complex<double> tr_a = 0.0, tr_aa = 0.0;
  double tr_n = 0.0, tr = 0.0;
  for (int m = 0; m < d; ++m) {
    tr += rho(m, m).real();
    tr_n += m * rho(m, m).real();
    if (m >= 1) tr_a += rho(m, m - 1) * std::sqrt(double(m));
    if (m >= 2) tr_aa += rho(m, m - 2) * std::sqrt(double(m) * double(m - 1));
  }
  if (!(tr > 0.0)) throw domain_error("moments: state has nonpositive trace");
  tr_a /= tr;
  tr_aa /= tr;
  tr_n /= tr;

  MomentSummary m;
  m.trace = tr;
  m.mean_x = 2.0 * tr_a.real();
  m.mean_p = 2.0 * tr_a.imag();
  m.var_x = 2.0 * tr_aa.real() + 2.0 * tr_n + 1.0 - m.mean_x * m.mean_x;
  m.var_p = -2.0 * tr_aa.real() + 2.0 * tr_n + 1.0 - m.mean_p * m.mean_p;
  m.cov_xp = 2.0 * tr_aa.imag() - m.mean_x * m.mean_p;
  return m;
}

// Smallest power-of-two-style cutoff (doubling from 16) for which the
// estimated post-amplification tail mass stays below 1e-10.
inline int recommended_cutoff(double lambda_th, double displacement_abs,
                              double gain, int max_dim = 256) {
  if (!(lambda_th >= 0.0) || lambda_th >= 1.0)
    throw domain_error("recommended_cutoff: lambda_th must be in [0, 1)");
  const double gl = gain * lambda_th;
  if (gl >= 1.0)
    throw infeasible_error("recommended_cutoff: amplified state diverges",
                           binding_constraint::gain_cutoff);
  const double g_coh = gain * (1.0 - lambda_th * lambda_th) /
                       (1.0 - gain * gain * lambda_th * lambda_th);
  const double mu = g_coh * displacement_abs * g_coh * displacement_abs;
  for (int dim = 16; dim <= max_dim; dim *= 2) {
    const double thermal_tail =
        std::pow(gl, 2.0 * dim) / (1.0 - gl * gl);
    double poisson_tail = 0.0;
    if (mu > 0.0 && dim > mu)
      poisson_tail = std::exp(-mu + dim * (1.0 + std::log(mu / dim)));
    if (thermal_tail + poisson_tail < 1e-10) return dim;
  }
  throw truncation_error("recommended_cutoff: no cutoff up to max_dim meets "
                         "the tail target");
}

// End-to-end consistency check of the equivalent-channel parameters
// against a direct truncated-Fock simulation of the amplified protocol.
//
// Alice heterodynes her half of the two-mode squeezed state; conditioned on
// outcome alpha, Bob holds a displaced thermal state of the channel noise.
// The amplifier filter reweights both Bob's states and the distribution of
// Alice's outcomes.  The joint covariance assembled from the simulated
// moments is compared entry by entry with the closed-form covariance built
// from (zeta, eta, eps_g); the return value is the largest absolute
// deviation in shot-noise units.
inline double verify_equivalent_channel(const ProtocolParams& protocol,
                                        const ChannelParams& channel, int dim,
                                        int quadrature_order = 41) {
  protocol.validate();
  channel.validate();
  const EffectiveParams ep = effective_params(protocol, channel);
  if (!ep.feasible)
    throw infeasible_error("verify_equivalent_channel: infeasible point",
                           ep.binding);

  const double lam = protocol.epr_lambda;
  const double g = protocol.gain;
  const double t = channel.transmittance;
  const double eps = channel.excess_noise;
  const double lambda_ch = std::sqrt(t * eps / (2.0 + t * eps));
  const double sigma_a = std::sqrt(0.5 / (1.0 - lam * lam));
  const double inf = std::numeric_limits<double>::infinity();

  const GaussHermiteRule rule = gauss_hermite(quadrature_order);

  // Weighted accumulators over Alice's outcome grid.
  double sw = 0.0;
  double s_xa = 0.0, s_xa2 = 0.0, s_pa = 0.0, s_pa2 = 0.0;
  double s_mx = 0.0, s_mx2 = 0.0, s_mp = 0.0, s_mp2 = 0.0;
  double s_xa_mx = 0.0, s_pa_mp = 0.0;
  double s_vx = 0.0, s_vp = 0.0;

  for (int i = 0; i < quadrature_order; ++i) {
    const double ax = std::sqrt(2.0) * sigma_a * rule.nodes[i];
    for (int j = 0; j < quadrature_order; ++j) {
      const double ay = std::sqrt(2.0) * sigma_a * rule.nodes[j];
      const double w_grid =
          rule.weights[i] * rule.weights[j] / std::acos(-1.0);

      const std::complex<double> alpha(ax, ay);
      const std::complex<double> beta_bob =
          std::sqrt(t) * lam * std::conj(alpha);
      const TruncatedState before = make_displaced_thermal(
          lambda_ch, beta_bob.real(), beta_bob.imag(), dim, inf);
      const TruncatedState after = apply_nla(before, g, inf);
      const MomentSummary mom = moments(after);

      const double w = w_grid * success_weight(before, g);
      const double xa = 2.0 * ax;  // Alice's measured quadratures
      const double pa = 2.0 * ay;
      sw += w;
      s_xa += w * xa;
      s_xa2 += w * xa * xa;
      s_pa += w * pa;
      s_pa2 += w * pa * pa;
      s_mx += w * mom.mean_x;
      s_mx2 += w * mom.mean_x * mom.mean_x;
      s_mp += w * mom.mean_p;
      s_mp2 += w * mom.mean_p * mom.mean_p;
      s_xa_mx += w * xa * mom.mean_x;
      s_pa_mp += w * pa * mom.mean_p;
      s_vx += w * mom.var_x;
      s_vp += w * mom.var_p;
    }
  }

  const double m_xa = s_xa / sw, m_pa = s_pa / sw;
  const double m_mx = s_mx / sw, m_mp = s_mp / sw;
  // Alice's heterodyne outcomes carry one unit of vacuum penalty on the
  // diagonal entries; cross covariances carry none.
  const double a_x = s_xa2 / sw - m_xa * m_xa - 1.0;
  const double a_p = s_pa2 / sw - m_pa * m_pa - 1.0;
  const double b_x = s_vx / sw + (s_mx2 / sw - m_mx * m_mx);
  const double b_p = s_vp / sw + (s_mp2 / sw - m_mp * m_mp);
  const double c_x = s_xa_mx / sw - m_xa * m_mx;
  const double c_p = s_pa_mp / sw - m_pa * m_mp;

  ProtocolParams eff = ep.as_protocol(protocol);
  const TwoModeCovariance target = build_covariance(eff, ep.as_channel());

  double dev = 0.0;
  for (double diff : {a_x - target.a, a_p - target.a, b_x - target.b,
                      b_p - target.b, c_x - target.c, c_p + target.c})
    dev = std::max(dev, std::abs(diff));
  return dev;
}

}  // namespace cvqkd
