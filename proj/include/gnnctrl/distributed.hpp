#ifndef GNNCTRL_DISTRIBUTED_HPP
#define GNNCTRL_DISTRIBUTED_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "gnnctrl/arch.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/filter.hpp"
#include "gnnctrl/graph.hpp"

// Per-node evaluation paths. Everything in here touches a node's own data
// and its neighbors' messages only — no node ever reads the full S or X.
// These exist to demonstrate (and test) that the dense linear-algebra
// evaluations elsewhere in the library compute something a real network
// could compute; the dense forms remain the fast path.

namespace gnnctrl {

/// Static graph filter by explicit message passing: K aggregation rounds
/// within one instant. Round k hands every node the sum of its neighbors'
/// round-(k-1) values; node i then forms y_i = sum_k stage_k(i) H_k locally.
inline GraphSignal distributed_apply_filter(const FilterTaps& h, const ShiftOperator& s,
                                            const GraphSignal& x) {
  if (x.cols() != h.f_in())
    throw invalid_input("distributed_apply_filter: feature width mismatch");
  if (s.matrix.rows() != x.rows())
    throw invalid_input("distributed_apply_filter: S and X disagree on node count");
  const int n = static_cast<int>(x.rows());
  const auto adj = neighbor_lists(s);

  std::vector<Eigen::RowVectorXd> stage(static_cast<std::size_t>(n));
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    stage[static_cast<std::size_t>(i)] = x.row(i);
    out[static_cast<std::size_t>(i)] = x.row(i) * h.taps[0];
  }
  for (int k = 1; k <= h.order(); ++k) {
    std::vector<Eigen::RowVectorXd> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
      for (int j : adj[static_cast<std::size_t>(i)]) acc += stage[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = std::move(acc);
    }
    stage = std::move(next);
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)].noalias() +=
          stage[static_cast<std::size_t>(i)] * h.taps[static_cast<std::size_t>(k)];
  }
  GraphSignal y(n, h.f_out());
  for (int i = 0; i < n; ++i) y.row(i) = out[static_cast<std::size_t>(i)];
  return y;
}

/// What one node broadcasts at the end of an instant: its delayed-input
/// aggregation stages 0..K-1 and, for the GRNN, its hidden-state stages.
/// A neighbor that receives this at the next instant promotes stage k-1
/// to its own stage k.
struct NodeMessage {
  std::vector<Eigen::RowVectorXd> x_stages;
  std::vector<Eigen::RowVectorXd> z_stages;
};

/// One agent's controller runtime: a private copy of the taps, the stage
/// memory, and (GRNN) the previous hidden state. Readout must be K_out = 0
/// — the flocking readout — since anything deeper would need extra
/// same-instant exchange rounds.
class NodeController {
 public:
  NodeController(const ArchHyper& hyper, const ModelParams& params)
      : hyper_(hyper), params_(params) {
    hyper_.validate();
    if (hyper_.k_out != 0)
      throw invalid_input("NodeController: only K_out = 0 readouts run per-node");
    z_prev_ = Eigen::RowVectorXd::Zero(hyper_.g);
  }

  /// Evaluate instant t. `x_inbox` holds messages from the node's current
  /// neighbors; `z_inbox` from its previous-instant neighbors (the hidden
  /// stages ride edges that existed when they were sent). Returns the
  /// node's action and fills `outgoing` for broadcast.
  Eigen::RowVectorXd step(const Eigen::RowVectorXd& x_own,
                          const std::vector<const NodeMessage*>& x_inbox,
                          const std::vector<const NodeMessage*>& z_inbox,
                          NodeMessage& outgoing) {
    const int kk = hyper_.k;
    std::vector<Eigen::RowVectorXd> d(static_cast<std::size_t>(kk) + 1);
    d[0] = x_own;
    for (int k = 1; k <= kk; ++k) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(hyper_.f_in);
      for (const NodeMessage* m : x_inbox) acc += m->x_stages[static_cast<std::size_t>(k - 1)];
      d[static_cast<std::size_t>(k)] = std::move(acc);
    }
    Eigen::RowVectorXd pre = d[0] * params_.input.taps[0];
    for (int k = 1; k <= kk; ++k)
      pre.noalias() += d[static_cast<std::size_t>(k)] * params_.input.taps[static_cast<std::size_t>(k)];

    std::vector<Eigen::RowVectorXd> e;
    if (hyper_.kind == ArchKind::grnn) {
      e.resize(static_cast<std::size_t>(kk) + 1);
      e[0] = z_prev_;
      for (int k = 1; k <= kk; ++k) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(hyper_.g);
        for (const NodeMessage* m : z_inbox) acc += m->z_stages[static_cast<std::size_t>(k - 1)];
        e[static_cast<std::size_t>(k)] = std::move(acc);
      }
      for (int k = 0; k <= kk; ++k)
        pre.noalias() += e[static_cast<std::size_t>(k)] * params_.recur.taps[static_cast<std::size_t>(k)];
    }

    Eigen::RowVectorXd z = hyper_.hidden() == Nonlinearity::tanh_fn
                               ? pre.array().tanh().matrix().eval()
                               : pre;
    outgoing.x_stages.assign(d.begin(), d.begin() + kk);
    if (hyper_.kind == ArchKind::grnn) {
      outgoing.z_stages.assign(e.begin(), e.begin() + kk);
      z_prev_ = z;
    }
    return z * params_.readout.taps[0];
  }

 private:
  ArchHyper hyper_;
  ModelParams params_;
  Eigen::RowVectorXd z_prev_;
};

/// Drives N NodeControllers over a recorded sequence of graphs and signals,
/// routing each instant's broadcasts along that instant's edges. Output row
/// i at step t is exactly node i's local computation.
inline std::vector<GraphSignal> run_node_network(const ArchHyper& hyper,
                                                 const ModelParams& params,
                                                 const std::vector<ShiftOperator>& supports,
                                                 const std::vector<GraphSignal>& signals) {
  if (supports.size() != signals.size())
    throw invalid_input("run_node_network: supports/signals length mismatch");
  if (supports.empty()) return {};
  const int n = static_cast<int>(signals[0].rows());
  std::vector<NodeController> nodes(static_cast<std::size_t>(n),
                                    NodeController(hyper, params));
  std::vector<NodeMessage> mailbox(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> adj_prev;

  std::vector<GraphSignal> outputs;
  outputs.reserve(supports.size());
  for (std::size_t t = 0; t < supports.size(); ++t) {
    const auto adj = neighbor_lists(supports[t]);
    std::vector<NodeMessage> next_mailbox(static_cast<std::size_t>(n));
    GraphSignal u(n, hyper.f_out);
    for (int i = 0; i < n; ++i) {
      std::vector<const NodeMessage*> x_inbox;
      if (t > 0)
        for (int j : adj[static_cast<std::size_t>(i)])
          x_inbox.push_back(&mailbox[static_cast<std::size_t>(j)]);
      std::vector<const NodeMessage*> z_inbox;
      if (t > 0 && hyper.kind == ArchKind::grnn)
        for (int j : adj_prev[static_cast<std::size_t>(i)])
          z_inbox.push_back(&mailbox[static_cast<std::size_t>(j)]);
      u.row(i) = nodes[static_cast<std::size_t>(i)].step(
          signals[t].row(i), x_inbox, z_inbox, next_mailbox[static_cast<std::size_t>(i)]);
    }
    outputs.push_back(std::move(u));
    mailbox = std::move(next_mailbox);
    adj_prev = adj;
  }
  return outputs;
}

}  // namespace gnnctrl

#endif  // GNNCTRL_DISTRIBUTED_HPP
