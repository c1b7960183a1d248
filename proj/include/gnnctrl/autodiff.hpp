#ifndef GNNCTRL_AUTODIFF_HPP
#define GNNCTRL_AUTODIFF_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

#include "gnnctrl/arch.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/filter.hpp"
#include "gnnctrl/graph.hpp"

namespace gnnctrl {

/// One recorded trajectory laid out for gradient work: per-step supports,
/// per-step input signals, per-step target actions.
struct TrajectoryTensors {
  std::vector<ShiftOperator> supports;
  std::vector<GraphSignal> features;
  std::vector<GraphSignal> targets;

  int steps() const { return static_cast<int>(supports.size()); }

  void validate(const ArchHyper& h) const {
    if (supports.size() != features.size() || supports.size() != targets.size())
      throw invalid_input("TrajectoryTensors: ragged step counts");
    if (supports.empty()) throw invalid_input("TrajectoryTensors: empty trajectory");
    const Eigen::Index n = features[0].rows();
    for (std::size_t t = 0; t < supports.size(); ++t) {
      if (features[t].rows() != n || targets[t].rows() != n || supports[t].matrix.rows() != n)
        throw invalid_input("TrajectoryTensors: node count varies across steps");
      if (features[t].cols() != h.f_in) throw invalid_input("TrajectoryTensors: feature width");
      if (targets[t].cols() != h.f_out) throw invalid_input("TrajectoryTensors: target width");
    }
  }
};

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

namespace detail {

/// S(t) S(t-1) ... S(t-k+1) * M, applied oldest support first — the same
/// association order the online evaluator uses, so the two forward passes
/// agree bit for bit.
inline GraphSignal chain_apply(const std::vector<ShiftOperator>& s, int t, int k,
                               const GraphSignal& m) {
  GraphSignal z = m;
  for (int j = t - k + 1; j <= t; ++j) z = s[static_cast<std::size_t>(j)].matrix * z;
  return z;
}

}  // namespace detail

/// Imitation loss of one trajectory and its exact gradient via reverse-mode
/// differentiation through time.
///
/// Loss: mean over steps of the per-entry squared error,
///   L = (1 / (T N F_out)) sum_t || U(t) - U*(t) ||_F^2.
///
/// The backward pass walks t from T-1 to 0; the GRNN's hidden-state
/// adjoint is scattered to earlier steps through the same support chains
/// the forward pass used (supports are symmetric, so transposed chains are
/// reversed chains).
inline LossGrad trajectory_loss_grad(const ArchHyper& h, const ModelParams& p,
                                     const TrajectoryTensors& traj) {
  h.validate();
  traj.validate(h);
  const int bigT = traj.steps();
  const int n = static_cast<int>(traj.features[0].rows());
  const bool recurrent = h.kind == ArchKind::grnn;
  const bool tanh_hidden = h.hidden() == Nonlinearity::tanh_fn;

  // ---- forward ----
  std::vector<GraphSignal> z(static_cast<std::size_t>(bigT));  // hidden states
  std::vector<GraphSignal> u(static_cast<std::size_t>(bigT));  // outputs
  double loss = 0.0;
  for (int t = 0; t < bigT; ++t) {
    GraphSignal pre = traj.features[static_cast<std::size_t>(t)] * p.input.taps[0];
    for (int k = 1; k <= h.k && k <= t; ++k)
      pre.noalias() += detail::chain_apply(traj.supports, t, k,
                                           traj.features[static_cast<std::size_t>(t - k)]) *
                       p.input.taps[static_cast<std::size_t>(k)];
    if (recurrent && t >= 1) {
      GraphSignal rec = z[static_cast<std::size_t>(t - 1)] * p.recur.taps[0];
      for (int k = 1; k <= h.k && k <= t - 1; ++k)
        rec.noalias() += detail::chain_apply(traj.supports, t - 1, k,
                                             z[static_cast<std::size_t>(t - 1 - k)]) *
                         p.recur.taps[static_cast<std::size_t>(k)];
      pre.noalias() += rec;
    }
    z[static_cast<std::size_t>(t)] = apply_nonlinearity(h.hidden(), pre);

    GraphSignal out = z[static_cast<std::size_t>(t)] * p.readout.taps[0];
    GraphSignal shifted = z[static_cast<std::size_t>(t)];
    for (int k = 1; k <= h.k_out; ++k) {
      shifted = traj.supports[static_cast<std::size_t>(t)].matrix * shifted;
      out.noalias() += shifted * p.readout.taps[static_cast<std::size_t>(k)];
    }
    u[static_cast<std::size_t>(t)] = std::move(out);
    loss += (u[static_cast<std::size_t>(t)] - traj.targets[static_cast<std::size_t>(t)])
                .squaredNorm();
  }
  const double scale = 1.0 / (static_cast<double>(bigT) * n * h.f_out);
  loss *= scale;

  // ---- backward ----
  FilterTaps g_input = FilterTaps::zeros(h.k, h.f_in, h.g);
  FilterTaps g_recur =
      recurrent ? FilterTaps::zeros(h.k, h.g, h.g) : FilterTaps();
  FilterTaps g_readout = FilterTaps::zeros(h.k_out, h.g, h.f_out);

  std::vector<GraphSignal> dz(static_cast<std::size_t>(bigT),
                              GraphSignal::Zero(n, h.g));
  for (int t = bigT - 1; t >= 0; --t) {
    const GraphSignal dq =
        2.0 * scale *
        (u[static_cast<std::size_t>(t)] - traj.targets[static_cast<std::size_t>(t)]);

    // readout: g_readout[k] += (S^k Z)^T dQ, dZ += S^k dQ C_k^T
    GraphSignal rfwd = z[static_cast<std::size_t>(t)];
    GraphSignal rbwd = dq;
    for (int k = 0; k <= h.k_out; ++k) {
      if (k > 0) {
        rfwd = traj.supports[static_cast<std::size_t>(t)].matrix * rfwd;
        rbwd = traj.supports[static_cast<std::size_t>(t)].matrix * rbwd;
      }
      g_readout.taps[static_cast<std::size_t>(k)].noalias() += rfwd.transpose() * dq;
      dz[static_cast<std::size_t>(t)].noalias() +=
          rbwd * p.readout.taps[static_cast<std::size_t>(k)].transpose();
    }

    GraphSignal dp = dz[static_cast<std::size_t>(t)];
    if (tanh_hidden)
      dp = (dp.array() *
            (1.0 - z[static_cast<std::size_t>(t)].array().square()))
               .matrix();

    for (int k = 0; k <= h.k && k <= t; ++k) {
      const GraphSignal dk =
          k == 0 ? traj.features[static_cast<std::size_t>(t)]
                 : detail::chain_apply(traj.supports, t, k,
                                       traj.features[static_cast<std::size_t>(t - k)]);
      g_input.taps[static_cast<std::size_t>(k)].noalias() += dk.transpose() * dp;
    }

    if (recurrent && t >= 1) {
      for (int k = 0; k <= h.k && k <= t - 1; ++k) {
        const GraphSignal ek =
            k == 0 ? z[static_cast<std::size_t>(t - 1)]
                   : detail::chain_apply(traj.supports, t - 1, k,
                                         z[static_cast<std::size_t>(t - 1 - k)]);
        g_recur.taps[static_cast<std::size_t>(k)].noalias() += ek.transpose() * dp;
      }
      // hidden-state adjoint: dZ(t-1-k) += S(t-k) ... S(t-1) dP B_k^T
      GraphSignal w = dp;
      for (int k = 0; k <= h.k && k <= t - 1; ++k) {
        if (k > 0) w = traj.supports[static_cast<std::size_t>(t - k)].matrix * w;
        dz[static_cast<std::size_t>(t - 1 - k)].noalias() +=
            w * p.recur.taps[static_cast<std::size_t>(k)].transpose();
      }
    }
  }

  ModelParams g;
  g.input = std::move(g_input);
  g.recur = std::move(g_recur);
  g.readout = std::move(g_readout);
  return {loss, flatten(h, g)};
}

/// Central-difference gradient of an arbitrary scalar function of the flat
/// parameter vector. Slow by construction; used to audit the analytic
/// gradients.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& at,
    double step = 1e-5) {
  Eigen::VectorXd g(at.size());
  Eigen::VectorXd w = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    const double keep = w[i];
    w[i] = keep + step;
    const double hi = f(w);
    w[i] = keep - step;
    const double lo = f(w);
    w[i] = keep;
    g[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

}  // namespace gnnctrl

#endif  // GNNCTRL_AUTODIFF_HPP
