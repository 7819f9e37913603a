#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "deep/dynamics.hpp"
#include "deep/network.hpp"

namespace deep {

namespace detail {

// Sequential sums shared by the certificate and the Gershgorin check so that
// the two evaluate bit-identical quantities.
template <typename Scalar>
Scalar outgoing_sum(const Network<Scalar>& net, Index j) {
  Scalar acc = 0;
  for (Index i = 0; i < net.n_total; ++i) acc += net.weights(j, i);
  return acc;
}

template <typename Scalar>
Scalar incoming_abs_sum(const Network<Scalar>& net, Index j) {
  Scalar acc = 0;
  for (Index i = net.n_input; i < net.n_total; ++i) acc += std::abs(net.weights(i, j));
  return acc;
}

}  // namespace detail

/// Sum of the free (beta = 0) drift over all neurons. Zero, up to rounding,
/// whenever the network has no biases and no input neurons.
template <typename Scalar>
Scalar conservation_residual(const Network<Scalar>& net, const VectorX<Scalar>& s) {
  return vector_field(net, s, VectorX<Scalar>(), Scalar(0)).sum();
}

/// Jacobian of the unclamped free dynamics restricted to non-input
/// coordinates: entry (j, i) is W_ij for i != j, diagonal W_jj - sum_i W_ji.
/// Constant in s because the free dynamics is affine.
template <typename Scalar>
MatrixX<Scalar> free_jacobian(const Network<Scalar>& net) {
  const Index p = net.n_input;
  const Index h = net.n_total - p;
  MatrixX<Scalar> jac = net.weights.block(p, p, h, h).transpose();
  for (Index r = 0; r < h; ++r) {
    const Index j = p + r;
    jac(r, r) = net.weights(j, j) - detail::outgoing_sum(net, j);
  }
  return jac;
}

template <typename Scalar = double>
struct NeuronStability {
  Index neuron{0};
  Scalar outgoing_sum{0};      // sum_i W_ji
  Scalar incoming_abs_sum{0};  // sum over non-input i of |W_ij|
  bool condition_met{false};
};

template <typename Scalar = double>
struct StabilityReport {
  std::vector<NeuronStability<Scalar>> neurons;  // one entry per non-input neuron
  bool overall_certified{false};
};

/// Sufficient-condition certificate for local asymptotic stability of the
/// free equilibrium: for every non-input j, sum_i W_ji > 0 and the absolute
/// incoming sum over non-input sources stays below |sum_i W_ji|. A false
/// verdict asserts nothing.
template <typename Scalar>
StabilityReport<Scalar> stability_certificate(const Network<Scalar>& net) {
  StabilityReport<Scalar> report;
  report.overall_certified = true;
  for (Index j = net.n_input; j < net.n_total; ++j) {
    NeuronStability<Scalar> row;
    row.neuron = j;
    row.outgoing_sum = detail::outgoing_sum(net, j);
    row.incoming_abs_sum = detail::incoming_abs_sum(net, j);
    row.condition_met =
        row.outgoing_sum > Scalar(0) && row.incoming_abs_sum < std::abs(row.outgoing_sum);
    report.overall_certified = report.overall_certified && row.condition_met;
    report.neurons.push_back(row);
  }
  return report;
}

/// Row-convention Gershgorin test: every diagonal entry negative and every
/// off-diagonal absolute row sum strictly below the diagonal's magnitude.
template <typename Scalar>
bool gershgorin_check(const MatrixX<Scalar>& jac) {
  if (jac.rows() != jac.cols())
    throw std::invalid_argument("gershgorin_check: matrix must be square");
  for (Index r = 0; r < jac.rows(); ++r) {
    const Scalar diag = jac(r, r);
    if (!(diag < Scalar(0))) return false;
    Scalar radius = 0;
    for (Index c = 0; c < jac.cols(); ++c)
      if (c != r) radius += std::abs(jac(r, c));
    if (!(radius < std::abs(diag))) return false;
  }
  return true;
}

template <typename Scalar = double>
struct ProbeResult {
  Scalar fraction{0};           // perturbations that returned to the equilibrium
  bool boundary_warning{false}; // equilibrium touches the hard-sigmoid clamp
  VectorX<Scalar> equilibrium;
};

/// Perturb-and-relax probe: relaxes to s0, applies n_trials interior
/// perturbations of the given max-norm, and reports the fraction that relax
/// back to within 1e-6 of s0.
template <typename Scalar, typename Rng>
ProbeResult<Scalar> empirical_stability_probe(const Network<Scalar>& net, const VectorX<Scalar>& x,
                                              const Hyperparams<Scalar>& hp, Index n_trials,
                                              Scalar noise, Rng& rng) {
  if (n_trials < 1)
    throw std::invalid_argument("empirical_stability_probe: n_trials >= 1 violated");
  constexpr Scalar kReturnTol = Scalar(1e-6);

  ProbeResult<Scalar> result;
  result.equilibrium = free_equilibrium(net, x, hp);
  const VectorX<Scalar>& s0 = result.equilibrium;
  for (Index j = net.n_input; j < net.n_total; ++j)
    if (s0(j) <= Scalar(0) || s0(j) >= Scalar(1)) result.boundary_warning = true;

  std::uniform_real_distribution<Scalar> jitter(-noise, noise);
  Index returned = 0;
  for (Index t = 0; t < n_trials; ++t) {
    VectorX<Scalar> s = s0;
    for (Index j = net.n_input; j < net.n_total; ++j)
      s(j) = hard_sigmoid(s(j) + jitter(rng));
    const auto traj = relax(net, s, x, VectorX<Scalar>(), Scalar(0), hp.m0, hp);
    if ((traj.states.back() - s0).cwiseAbs().maxCoeff() <= kReturnTol) ++returned;
  }
  result.fraction = static_cast<Scalar>(returned) / static_cast<Scalar>(n_trials);
  return result;
}

}  // namespace deep
