#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace deep {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

enum class NeuronRole : std::uint8_t { Input, Hidden, Output };

inline char role_char(NeuronRole r) {
  switch (r) {
    case NeuronRole::Input: return 'I';
    case NeuronRole::Hidden: return 'H';
    case NeuronRole::Output: return 'O';
  }
  return '?';
}

/// Relaxation, learning and pruning hyperparameters.
template <typename Scalar = double>
struct Hyperparams {
  Scalar beta{Scalar(0.5)};            // nudge strength of the second phase
  Scalar step_size{Scalar(0.1)};       // explicit integration step
  int m0{60};                          // first-phase steps
  int m_beta{10};                      // second-phase steps
  Scalar learning_rate{Scalar(0.5)};
  Scalar l1_coeff{Scalar(0)};
  Scalar lambda_prune{Scalar(0.05)};   // pruning threshold
  Scalar temperature{Scalar(0.1)};     // pruning lottery temperature
  Scalar init_scale{Scalar(0.5)};
  std::uint64_t seed{0};
  Scalar state_init{Scalar(0.5)};      // reset value for non-input coordinates
  Scalar convergence_tol{Scalar(0)};   // early-stop tolerance on relax updates, 0 disables

  void validate() const {
    if (!(step_size > Scalar(0))) throw std::invalid_argument("hyperparams: step_size > 0 violated");
    if (m0 < 1) throw std::invalid_argument("hyperparams: m0 >= 1 violated");
    if (m_beta < 1) throw std::invalid_argument("hyperparams: m_beta >= 1 violated");
    if (!(learning_rate > Scalar(0))) throw std::invalid_argument("hyperparams: learning_rate > 0 violated");
    if (l1_coeff < Scalar(0)) throw std::invalid_argument("hyperparams: l1_coeff >= 0 violated");
    if (!(lambda_prune > Scalar(0))) throw std::invalid_argument("hyperparams: lambda_prune > 0 violated");
    if (!(temperature > Scalar(0))) throw std::invalid_argument("hyperparams: temperature > 0 violated");
    if (!(init_scale > Scalar(0))) throw std::invalid_argument("hyperparams: init_scale > 0 violated");
    if (state_init < Scalar(0) || state_init > Scalar(1))
      throw std::invalid_argument("hyperparams: state_init in [0,1] violated");
    if (convergence_tol < Scalar(0)) throw std::invalid_argument("hyperparams: convergence_tol >= 0 violated");
  }
};

/// A complete directed network: weight matrix (entry (i,j) is the connection
/// i -> j), bias vector, and boolean masks marking which parameters exist.
/// Masked-out parameters are structurally absent: their values are zero and
/// they never re-enter training.
template <typename Scalar = double>
struct Network {
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  Index n_total{0};
  Index n_input{0};
  std::vector<NeuronRole> roles;
  Matrix weights;
  Vector bias;
  MaskMatrix mask;
  MaskVector bias_mask;
  // Trainable-parameter count at construction; denominator of sparsity_fraction.
  Index initial_params{0};

  bool is_input(Index j) const { return roles[static_cast<std::size_t>(j)] == NeuronRole::Input; }
  NeuronRole role(Index j) const { return roles[static_cast<std::size_t>(j)]; }

  Index n_output() const {
    Index c = 0;
    for (auto r : roles) c += (r == NeuronRole::Output);
    return c;
  }
  Index n_hidden() const { return n_total - n_input - n_output(); }

  std::vector<Index> output_indices() const {
    std::vector<Index> out;
    for (Index j = 0; j < n_total; ++j)
      if (roles[static_cast<std::size_t>(j)] == NeuronRole::Output) out.push_back(j);
    return out;
  }
};

using Networkd = Network<double>;

template <typename Scalar>
Index trainable_parameter_count(const Network<Scalar>& net) {
  return net.mask.count() + net.bias_mask.count();
}

/// Fraction of the originally trainable parameters that have been removed.
template <typename Scalar>
Scalar sparsity_fraction(const Network<Scalar>& net) {
  if (net.initial_params == 0)
    throw std::domain_error("sparsity_fraction: network has no trainable parameters (undefined ratio)");
  const Index removed = net.initial_params - trainable_parameter_count(net);
  return static_cast<Scalar>(removed) / static_cast<Scalar>(net.initial_params);
}

/// Fresh complete directed network: every ordered pair (i, j) with i != j and
/// j non-input carries a weight, every non-input neuron a bias. Present
/// parameters are drawn i.i.d. uniform on [-init_scale, init_scale] from the
/// seeded generator; identical arguments give a bit-identical network.
template <typename Scalar = double>
Network<Scalar> new_complete_network(Index n_total, Index n_input, Index n_output,
                                     Scalar init_scale, std::uint64_t seed) {
  if (n_input < 0) throw std::invalid_argument("new_complete_network: n_input >= 0 violated");
  if (n_output < 1) throw std::invalid_argument("new_complete_network: n_output >= 1 violated");
  if (n_input + n_output > n_total)
    throw std::invalid_argument("new_complete_network: n_input + n_output <= n_total violated");
  if (!(init_scale > Scalar(0)))
    throw std::invalid_argument("new_complete_network: init_scale > 0 violated");

  Network<Scalar> net;
  net.n_total = n_total;
  net.n_input = n_input;
  net.roles.assign(static_cast<std::size_t>(n_total), NeuronRole::Hidden);
  for (Index j = 0; j < n_input; ++j) net.roles[static_cast<std::size_t>(j)] = NeuronRole::Input;
  for (Index j = n_total - n_output; j < n_total; ++j)
    net.roles[static_cast<std::size_t>(j)] = NeuronRole::Output;

  net.weights = MatrixX<Scalar>::Zero(n_total, n_total);
  net.bias = VectorX<Scalar>::Zero(n_total);
  net.mask = MaskMatrix::Constant(n_total, n_total, false);
  net.bias_mask = MaskVector::Constant(n_total, false);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> dist(-init_scale, init_scale);
  for (Index i = 0; i < n_total; ++i)
    for (Index j = 0; j < n_total; ++j)
      if (i != j && !net.is_input(j)) {
        net.mask(i, j) = true;
        net.weights(i, j) = dist(rng);
      }
  for (Index j = 0; j < n_total; ++j)
    if (!net.is_input(j)) {
      net.bias_mask(j) = true;
      net.bias(j) = dist(rng);
    }

  net.initial_params = trainable_parameter_count(net);
  return net;
}

/// Consistency check for explicitly assembled networks (e.g. parsed files).
/// Self-connections are always rejected; connections into input neurons are
/// tolerated so that stability-analysis instances can carry extra leak edges.
template <typename Scalar>
void validate_network(const Network<Scalar>& net) {
  const Index n = net.n_total;
  if (static_cast<Index>(net.roles.size()) != n || net.weights.rows() != n ||
      net.weights.cols() != n || net.bias.size() != n || net.mask.rows() != n ||
      net.mask.cols() != n || net.bias_mask.size() != n)
    throw std::invalid_argument("network: inconsistent dimensions");
  Index inputs = 0, outputs = 0;
  for (Index j = 0; j < n; ++j) {
    if (net.is_input(j)) {
      if (j != inputs) throw std::invalid_argument("network: input neurons must be a prefix");
      ++inputs;
    } else if (net.role(j) == NeuronRole::Output) {
      ++outputs;
    }
  }
  if (inputs != net.n_input) throw std::invalid_argument("network: role string disagrees with n_input");
  if (outputs < 1) throw std::invalid_argument("network: at least one output neuron required");
  for (Index j = 0; j < n; ++j) {
    if (net.mask(j, j)) throw std::invalid_argument("network: self-connections are not allowed");
    if (net.weights(j, j) != Scalar(0)) throw std::invalid_argument("network: nonzero self-weight");
    if (net.is_input(j)) {
      if (net.bias_mask(j) || net.bias(j) != Scalar(0))
        throw std::invalid_argument("network: input neurons carry no bias");
    }
    if (!net.bias_mask(j) && net.bias(j) != Scalar(0))
      throw std::invalid_argument("network: masked-out bias must be zero");
    for (Index i = 0; i < n; ++i)
      if (!net.mask(i, j) && net.weights(i, j) != Scalar(0))
        throw std::invalid_argument("network: masked-out weight must be zero");
  }
}

}  // namespace deep
