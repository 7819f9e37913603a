#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deep/network.hpp"

namespace deep {

/// Source index standing for the virtual always-one neuron behind the biases.
inline constexpr Index kBiasSource = -1;

/// Boltzmann removal distribution across the present incoming parameters of
/// one neuron. sources[k] pairs with probabilities[k]; kBiasSource marks the
/// bias. Probabilities sum to 1 whenever nonempty.
template <typename Scalar = double>
struct PruneDistribution {
  std::vector<Index> sources;
  VectorX<Scalar> probabilities;

  bool empty() const { return sources.empty(); }
  Index size() const { return static_cast<Index>(sources.size()); }
};

/// One removed parameter. epoch/example_index are stamped by the caller that
/// knows the training position.
template <typename Scalar = double>
struct PruneEvent {
  Index target{0};
  Index source{0};  // kBiasSource for the bias
  Scalar probability{0};
  Scalar weight_value{0};
  Index epoch{0};
  Index example_index{0};
};

/// p_ij = exp(-|W_ij|/T) / sum_k exp(-|W_kj|/T) over the currently present
/// incoming parameters of neuron j (bias included as the virtual source).
template <typename Scalar>
PruneDistribution<Scalar> prune_probabilities(const Network<Scalar>& net, Index j,
                                              Scalar temperature) {
  if (j < 0 || j >= net.n_total) throw std::invalid_argument("prune_probabilities: neuron index out of range");
  if (net.is_input(j)) throw std::invalid_argument("prune_probabilities: target must be a non-input neuron");
  if (!(temperature > Scalar(0))) throw std::invalid_argument("prune_probabilities: temperature > 0 violated");

  PruneDistribution<Scalar> dist;
  std::vector<Scalar> magnitudes;
  for (Index i = 0; i < net.n_total; ++i)
    if (net.mask(i, j)) {
      dist.sources.push_back(i);
      magnitudes.push_back(std::abs(net.weights(i, j)));
    }
  if (net.bias_mask(j)) {
    dist.sources.push_back(kBiasSource);
    magnitudes.push_back(std::abs(net.bias(j)));
  }
  if (dist.sources.empty()) return dist;

  // Shift by the smallest magnitude so the largest exponent is exactly 0.
  Scalar min_mag = magnitudes.front();
  for (Scalar m : magnitudes) min_mag = std::min(min_mag, m);
  dist.probabilities.resize(static_cast<Index>(magnitudes.size()));
  Scalar total = 0;
  for (std::size_t k = 0; k < magnitudes.size(); ++k) {
    const Scalar e = std::exp(-(magnitudes[k] - min_mag) / temperature);
    dist.probabilities(static_cast<Index>(k)) = e;
    total += e;
  }
  dist.probabilities /= total;
  return dist;
}

/// One pruning lottery: every present parameter with |value| < lambda gets an
/// independent Bernoulli draw with its p_ij (all probabilities evaluated on
/// the pre-removal network) and is permanently removed on success.
template <typename Scalar, typename Rng>
std::pair<Network<Scalar>, std::vector<PruneEvent<Scalar>>> prune_step(const Network<Scalar>& net,
                                                                       const Hyperparams<Scalar>& hp,
                                                                       Rng& rng) {
  if (!(hp.lambda_prune > Scalar(0)))
    throw std::invalid_argument("prune_step: lambda_prune > 0 violated");

  Network<Scalar> out = net;
  std::vector<PruneEvent<Scalar>> events;
  std::uniform_real_distribution<Scalar> unit(Scalar(0), Scalar(1));

  for (Index j = net.n_input; j < net.n_total; ++j) {
    const auto dist = prune_probabilities(net, j, hp.temperature);
    for (Index k = 0; k < dist.size(); ++k) {
      const Index src = dist.sources[static_cast<std::size_t>(k)];
      const Scalar value = (src == kBiasSource) ? net.bias(j) : net.weights(src, j);
      if (std::abs(value) >= hp.lambda_prune) continue;
      if (unit(rng) < dist.probabilities(k)) {
        if (src == kBiasSource) {
          out.bias(j) = 0;
          out.bias_mask(j) = false;
        } else {
          out.weights(src, j) = 0;
          out.mask(src, j) = false;
        }
        PruneEvent<Scalar> ev;
        ev.target = j;
        ev.source = src;
        ev.probability = dist.probabilities(k);
        ev.weight_value = value;
        events.push_back(ev);
      }
    }
  }
  return {std::move(out), std::move(events)};
}

}  // namespace deep
