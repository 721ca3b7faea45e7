#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Input outside the mathematical domain of an operation (e.g. T <= 0).
class domain_error : public std::invalid_argument {
 public:
  explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

// A covariance matrix violated the uncertainty bound beyond numerical noise.
class physicality_error : public std::runtime_error {
 public:
  explicit physicality_error(const std::string& what) : std::runtime_error(what) {}
};

// Names the constraint that makes a parameter set unusable for the
// amplified protocol.  `none` means all constraints are satisfied.
enum class binding_constraint {
  none,
  zeta_ge_one,   // effective EPR parameter reaches 1 (state unnormalizable)
  eta_gt_one,    // effective transmittance exceeds 1 (gain above max_gain)
  eps_negative,  // effective excess noise driven below 0
  gain_cutoff,   // g * lambda_ch >= 1 (amplified thermal state diverges)
};

inline const char* to_string(binding_constraint c) {
  switch (c) {
    case binding_constraint::none: return "none";
    case binding_constraint::zeta_ge_one: return "zeta_ge_one";
    case binding_constraint::eta_gt_one: return "eta_gt_one";
    case binding_constraint::eps_negative: return "eps_negative";
    case binding_constraint::gain_cutoff: return "gain_cutoff";
  }
  return "unknown";
}

// Requested operating point lies outside the amplifier's feasible region.
class infeasible_error : public std::runtime_error {
 public:
  infeasible_error(const std::string& what, binding_constraint which)
      : std::runtime_error(what + " (binding constraint: " + to_string(which) + ")"),
        constraint(which) {}
  binding_constraint constraint;
};

// An iterative routine failed to reach its tolerance.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// A Fock-space cutoff was too small for the requested accuracy.
class truncation_error : public std::runtime_error {
 public:
  explicit truncation_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvqkd
