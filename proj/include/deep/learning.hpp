#pragma once

#include <stdexcept>

#include "deep/dynamics.hpp"
#include "deep/network.hpp"

namespace deep {

/// Raw parameter deltas before the learning rate is applied. Entries at
/// masked-out positions are exactly zero.
template <typename Scalar = double>
struct ParameterUpdate {
  MatrixX<Scalar> d_weights;
  VectorX<Scalar> d_bias;
};

namespace detail {

template <typename Scalar>
ParameterUpdate<Scalar> masked_update(const Network<Scalar>& net, const MatrixX<Scalar>& dw,
                                      const VectorX<Scalar>& db) {
  ParameterUpdate<Scalar> upd;
  upd.d_weights = net.mask.select(dw, Scalar(0));
  upd.d_bias = net.bias_mask.select(db.array(), Scalar(0));
  return upd;
}

}  // namespace detail

/// Trajectory-integrated rule: averages s_i(m) * (s_j(m) - s_j(m-1)) over the
/// second-phase steps. Bias deltas use 1 in place of s_i(m) (weights out of a
/// virtual always-one neuron). No learning rate, no regularization here.
template <typename Scalar>
ParameterUpdate<Scalar> deep_update(const PhaseTrajectory<Scalar>& second_phase,
                                    const Network<Scalar>& net) {
  const auto& st = second_phase.states;
  if (st.size() < 2)
    throw std::invalid_argument("deep_update: second-phase trajectory needs at least 2 states");
  const Index n = net.n_total;
  const Index m_beta = static_cast<Index>(st.size()) - 1;
  MatrixX<Scalar> dw = MatrixX<Scalar>::Zero(n, n);
  VectorX<Scalar> db = VectorX<Scalar>::Zero(n);
  for (Index m = 1; m <= m_beta; ++m) {
    const VectorX<Scalar> diff = st[static_cast<std::size_t>(m)] - st[static_cast<std::size_t>(m - 1)];
    dw.noalias() += st[static_cast<std::size_t>(m)] * diff.transpose();
    db += diff;
  }
  dw /= static_cast<Scalar>(m_beta);
  db /= static_cast<Scalar>(m_beta);
  return detail::masked_update(net, dw, db);
}

/// One-step endpoint rule: s_i^0 * (s_j^beta - s_j^0), the forward-difference
/// reduction of the trajectory-integrated update.
template <typename Scalar>
ParameterUpdate<Scalar> asym_ep_update(const VectorX<Scalar>& s0, const VectorX<Scalar>& s_beta,
                                       const Network<Scalar>& net) {
  if (s0.size() != s_beta.size() || s0.size() != net.n_total)
    throw std::invalid_argument("asym_ep_update: state size mismatch");
  const VectorX<Scalar> diff = s_beta - s0;
  MatrixX<Scalar> dw = s0 * diff.transpose();
  return detail::masked_update(net, dw, diff);
}

/// W <- W + lr * dW - lr * l1 * sign(W) on present parameters; masked-out
/// entries stay exactly zero. sign(0) = 0.
template <typename Scalar>
Network<Scalar> apply_update(const Network<Scalar>& net, const ParameterUpdate<Scalar>& upd,
                             const Hyperparams<Scalar>& hp) {
  if (upd.d_weights.rows() != net.n_total || upd.d_weights.cols() != net.n_total ||
      upd.d_bias.size() != net.n_total)
    throw std::invalid_argument("apply_update: update size mismatch");
  const Scalar lr = hp.learning_rate;
  const Scalar shrink = lr * hp.l1_coeff;
  Network<Scalar> out = net;
  const MatrixX<Scalar> w =
      net.weights + lr * upd.d_weights - shrink * net.weights.array().sign().matrix();
  const VectorX<Scalar> b =
      net.bias + lr * upd.d_bias - shrink * net.bias.array().sign().matrix();
  out.weights = net.mask.select(w, Scalar(0));
  out.bias = net.bias_mask.select(b.array(), Scalar(0));
  return out;
}

}  // namespace deep
