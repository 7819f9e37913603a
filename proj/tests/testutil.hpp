#pragma once

// Shared generators and finite-difference oracles for the test suites. The
// oracles here are deliberately independent of the library's evaluation path.

#include <cmath>
#include <random>

#include "deep/analysis.hpp"
#include "deep/dynamics.hpp"
#include "deep/network.hpp"

namespace testutil {

using deep::Index;

/// Complete network with parameter values redrawn uniformly on [-scale, scale].
inline deep::Networkd random_network(Index n_total, Index n_input, Index n_output,
                                     std::mt19937_64& rng, double scale = 1.0) {
  auto net = deep::new_complete_network<double>(n_total, n_input, n_output, scale, rng());
  return net;
}

inline Eigen::VectorXd random_state(Index n, std::mt19937_64& rng, double lo = 0.05,
                                    double hi = 0.95) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd s(n);
  for (Index j = 0; j < n; ++j) s(j) = d(rng);
  return s;
}

/// Central finite differences of mse_cost, the oracle for cost_gradient.
inline Eigen::VectorXd fd_cost_gradient(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y,
                                        double eps = 1e-6) {
  Eigen::VectorXd g(y_hat.size());
  for (Index k = 0; k < y_hat.size(); ++k) {
    Eigen::VectorXd up = y_hat, dn = y_hat;
    up(k) += eps;
    dn(k) -= eps;
    g(k) = (deep::mse_cost(up, y) - deep::mse_cost(dn, y)) / (2 * eps);
  }
  return g;
}

/// Central finite differences of the free vector field restricted to
/// non-input coordinates, the oracle for free_jacobian.
inline Eigen::MatrixXd fd_free_jacobian(const deep::Networkd& net, const Eigen::VectorXd& s,
                                        double eps = 1e-6) {
  const Index p = net.n_input;
  const Index h = net.n_total - p;
  Eigen::MatrixXd jac(h, h);
  const Eigen::VectorXd no_target;
  for (Index c = 0; c < h; ++c) {
    Eigen::VectorXd up = s, dn = s;
    up(p + c) += eps;
    dn(p + c) -= eps;
    const Eigen::VectorXd diff = (deep::vector_field(net, up, no_target, 0.0) -
                                  deep::vector_field(net, dn, no_target, 0.0)) /
                                 (2 * eps);
    jac.col(c) = diff.segment(p, h);
  }
  return jac;
}

/// Certified network with an interior free equilibrium. Hidden-block weights
/// are kept small against a large positive leak edge into the first input
/// neuron, so every Gershgorin disc sits in the left half-plane with margin
/// at least 0.1; the bias is then solved so that the equilibrium lands at a
/// chosen interior point for the given input pattern.
struct CertifiedInstance {
  deep::Networkd net;
  Eigen::VectorXd x;
  Eigen::VectorXd equilibrium;
};

inline CertifiedInstance make_certified_network(std::mt19937_64& rng, Index n_total = 6,
                                                Index n_input = 2, Index n_output = 1) {
  const Index p = n_input;
  const Index h = n_total - p;

  deep::Networkd net;
  net.n_total = n_total;
  net.n_input = p;
  net.roles.assign(static_cast<std::size_t>(n_total), deep::NeuronRole::Hidden);
  for (Index j = 0; j < p; ++j) net.roles[static_cast<std::size_t>(j)] = deep::NeuronRole::Input;
  for (Index j = n_total - n_output; j < n_total; ++j)
    net.roles[static_cast<std::size_t>(j)] = deep::NeuronRole::Output;
  net.weights = Eigen::MatrixXd::Zero(n_total, n_total);
  net.bias = Eigen::VectorXd::Zero(n_total);
  net.mask = deep::MaskMatrix::Constant(n_total, n_total, false);
  net.bias_mask = deep::MaskVector::Constant(n_total, false);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  // Small couplings inside the non-input block: |incoming| sums stay <= 0.4.
  const double coupling = (h > 1) ? 0.4 / static_cast<double>(h - 1) : 0.0;
  for (Index i = p; i < n_total; ++i)
    for (Index j = p; j < n_total; ++j)
      if (i != j) {
        net.mask(i, j) = true;
        net.weights(i, j) = coupling * sym(rng);
      }
  // Dominant stabilizing leak: a strong positive edge from every non-input
  // neuron back into input 0 keeps the outgoing sum above 1 - 0.4.
  for (Index j = p; j < n_total; ++j) {
    net.mask(j, 0) = true;
    net.weights(j, 0) = 1.0 + unit(rng);
  }
  // Drive from the inputs.
  for (Index i = 0; i < p; ++i)
    for (Index j = p; j < n_total; ++j) {
      net.mask(i, j) = true;
      net.weights(i, j) = 0.3 * sym(rng);
    }

  CertifiedInstance inst;
  inst.x = Eigen::VectorXd::Zero(p);
  for (Index i = 0; i < p; ++i) inst.x(i) = unit(rng);

  // Solve the bias so the unclamped equilibrium is an interior point of our
  // choosing: b_j = s*_j * outgoing_j - sum_i W_ij s*_i.
  Eigen::VectorXd target(n_total);
  target.head(p) = inst.x;
  std::uniform_real_distribution<double> interior(0.3, 0.7);
  for (Index j = p; j < n_total; ++j) target(j) = interior(rng);
  const Eigen::VectorXd outgoing = net.weights.rowwise().sum();
  const Eigen::VectorXd drive = net.weights.transpose() * target;
  for (Index j = p; j < n_total; ++j) {
    net.bias_mask(j) = true;
    net.bias(j) = target(j) * outgoing(j) - drive(j);
  }
  inst.equilibrium = target;
  net.initial_params = deep::trainable_parameter_count(net);
  inst.net = std::move(net);
  return inst;
}

}  // namespace testutil
