#pragma once

// Gauss-Hermite rule (weight exp(-x^2)) via the Golub-Welsch eigenvalue
// construction.  Used as an independent integration oracle against the
// kernel density code: integrals of the density and its low moments have
// closed forms the quadrature must reproduce.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace plom::testing {

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

// Integrates factor(u) * exp(log_density(u)) over the real line with the
// rule recentred on (mu, sigma).  The exp(x^2) de-weighting is folded into
// the exponent before a single exp per node; log w_i + x_i^2 stays O(log n)
// for Gauss-Hermite, so nothing overflows even for large rules.
template <typename Factor, typename LogDensity>
double integrate_line(const GaussHermiteRule& rule, double mu, double sigma,
                      Factor&& factor, LogDensity&& log_density) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    const double u = mu + sigma * x;
    const double log_term = std::log(rule.weights[i]) + x * x + log_density(u);
    acc += factor(u) * std::exp(log_term);
  }
  return sigma * acc;
}

}  // namespace plom::testing
