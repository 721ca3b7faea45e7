#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cvqkd/errors.hpp"

namespace cvqkd {

struct GaussHermiteRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // for the weight function exp(-t^2)
};

// Gauss-Hermite nodes and weights from the symmetric tridiagonal Jacobi
// matrix (Golub-Welsch).  Integrates exp(-t^2) f(t) exactly for
// polynomials f up to degree 2n - 1.
inline GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw domain_error("gauss_hermite: order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  const double sqrt_pi = std::sqrt(std::acos(-1.0));
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = sqrt_pi * v0 * v0;
  }
  return rule;
}

}  // namespace cvqkd
