#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deep/network.hpp"

namespace deep {

template <typename Scalar>
Scalar hard_sigmoid(Scalar x) {
  return std::min(Scalar(1), std::max(Scalar(0), x));
}

/// C = 1/2 * sum_k (y_hat_k - y_k)^2
template <typename Scalar>
Scalar mse_cost(const VectorX<Scalar>& y_hat, const VectorX<Scalar>& y) {
  if (y_hat.size() != y.size() || y.size() < 1)
    throw std::invalid_argument("mse_cost: vectors must have equal nonzero length");
  return Scalar(0.5) * (y_hat - y).squaredNorm();
}

template <typename Scalar>
VectorX<Scalar> cost_gradient(const VectorX<Scalar>& y_hat, const VectorX<Scalar>& y) {
  if (y_hat.size() != y.size())
    throw std::invalid_argument("cost_gradient: vectors must have equal length");
  return y_hat - y;
}

/// Instantaneous drift of every neuron:
///   V_j = sum_i W_ij s_i + b_j - s_j sum_i W_ji - beta (s_j - y_k) [j output].
/// Input components are reported too; relax holds them fixed.
template <typename Scalar>
VectorX<Scalar> vector_field(const Network<Scalar>& net, const VectorX<Scalar>& s,
                             const VectorX<Scalar>& y, Scalar beta) {
  if (s.size() != net.n_total)
    throw std::invalid_argument("vector_field: state size mismatch");
  VectorX<Scalar> v = net.weights.transpose() * s + net.bias -
                      s.cwiseProduct(net.weights.rowwise().sum());
  if (beta != Scalar(0)) {
    if (y.size() != net.n_output())
      throw std::invalid_argument("vector_field: target size must match output count");
    Index k = 0;
    for (Index j = 0; j < net.n_total; ++j)
      if (net.role(j) == NeuronRole::Output) v(j) -= beta * (s(j) - y(k++));
  }
  return v;
}

/// States recorded during one relaxation phase; states[0] is the initial
/// state and the sequence always has steps + 1 entries.
template <typename Scalar = double>
struct PhaseTrajectory {
  std::vector<VectorX<Scalar>> states;
  Scalar phase_beta{0};
  std::optional<Index> converged_at;

  const VectorX<Scalar>& initial() const { return states.front(); }
  const VectorX<Scalar>& final_state() const { return states.back(); }
  Index steps() const { return static_cast<Index>(states.size()) - 1; }
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(Index step)
      : std::runtime_error("relaxation diverged: non-finite state at step " + std::to_string(step)),
        step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_;
};

/// Clamped explicit stepping of the neuronal dynamics:
///   s <- hard_sigmoid(s + step_size * V(s)) on non-input coordinates,
/// with input coordinates pinned to x throughout. When convergence_tol > 0
/// and the max-norm update drops below it, the step index is recorded and the
/// trajectory is padded with the final state up to steps + 1 entries.
template <typename Scalar>
PhaseTrajectory<Scalar> relax(const Network<Scalar>& net, const VectorX<Scalar>& s_init,
                              const VectorX<Scalar>& x, const VectorX<Scalar>& y,
                              Scalar beta, Index steps, const Hyperparams<Scalar>& hp) {
  if (steps < 1) throw std::invalid_argument("relax: steps >= 1 violated");
  if (x.size() != net.n_input) throw std::invalid_argument("relax: input pattern size mismatch");
  if (s_init.size() != net.n_total) throw std::invalid_argument("relax: state size mismatch");

  VectorX<Scalar> s = s_init;
  s.head(net.n_input) = x;

  PhaseTrajectory<Scalar> traj;
  traj.phase_beta = beta;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(s);

  for (Index step = 1; step <= steps; ++step) {
    const VectorX<Scalar> v = vector_field(net, s, y, beta);
    if (!v.allFinite()) throw DivergenceError(step);
    Scalar max_update = 0;
    for (Index j = net.n_input; j < net.n_total; ++j) {
      const Scalar updated = hard_sigmoid(s(j) + hp.step_size * v(j));
      max_update = std::max(max_update, std::abs(updated - s(j)));
      s(j) = updated;
    }
    traj.states.push_back(s);
    if (hp.convergence_tol > Scalar(0) && max_update < hp.convergence_tol) {
      traj.converged_at = step;
      while (static_cast<Index>(traj.states.size()) <= steps) traj.states.push_back(s);
      break;
    }
  }
  return traj;
}

/// First-phase equilibrium s0 for a fixed input pattern: non-input
/// coordinates start at state_init and relax freely (beta = 0) for m0 steps.
template <typename Scalar>
VectorX<Scalar> free_equilibrium(const Network<Scalar>& net, const VectorX<Scalar>& x,
                                 const Hyperparams<Scalar>& hp) {
  VectorX<Scalar> s0 = VectorX<Scalar>::Constant(net.n_total, hp.state_init);
  s0.head(net.n_input) = x;
  const auto traj = relax(net, s0, x, VectorX<Scalar>(), Scalar(0), hp.m0, hp);
  return traj.states.back();
}

/// Output coordinates of a state, in ascending neuron order.
template <typename Scalar>
VectorX<Scalar> read_outputs(const Network<Scalar>& net, const VectorX<Scalar>& s) {
  const auto idx = net.output_indices();
  VectorX<Scalar> y_hat(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) y_hat(static_cast<Index>(k)) = s(idx[k]);
  return y_hat;
}

}  // namespace deep
