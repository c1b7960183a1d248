#ifndef GNNCTRL_TRAIN_HPP
#define GNNCTRL_TRAIN_HPP

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gnnctrl/adam.hpp"
#include "gnnctrl/arch.hpp"
#include "gnnctrl/autodiff.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/flocking.hpp"
#include "gnnctrl/kvconfig.hpp"
#include "gnnctrl/parallel.hpp"
#include "gnnctrl/rng.hpp"
#include "gnnctrl/serialize.hpp"
#include "gnnctrl/trajectory.hpp"

namespace gnnctrl {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 20;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int validate_every = 5;
  std::uint64_t seed = 0;
  double divergence_threshold = 1e6;

  AdamConfig adam() const { return {lr, beta1, beta2, eps}; }

  void validate() const {
    if (epochs < 0) throw config_error("train: epochs must be >= 0");
    if (batch_size < 1) throw config_error("train: batch_size must be >= 1");
    if (validate_every < 1) throw config_error("train: validate_every must be >= 1");
    adam().validate();
  }
};

/// Per-entry mean squared error between two action matrices.
inline double imitation_loss(const GraphSignal& u_pred, const GraphSignal& u_expert) {
  if (u_pred.rows() != u_expert.rows() || u_pred.cols() != u_expert.cols())
    throw invalid_input("imitation_loss: shape mismatch");
  return (u_pred - u_expert).squaredNorm() /
         (static_cast<double>(u_pred.rows()) * u_pred.cols());
}

/// Graph-signal norm used by the conceptual imitation objective: sum of the
/// Euclidean norms of the feature columns (the L_{2,1} matrix norm).
/// Reporting metric only; training minimizes the per-entry MSE.
inline double l21_norm(const GraphSignal& x) {
  double acc = 0.0;
  for (Eigen::Index f = 0; f < x.cols(); ++f) acc += x.col(f).norm();
  return acc;
}

/// Mean loss and exact gradient over a batch of trajectories. Per-trajectory
/// work may fan out over threads; the reduction always sums in batch index
/// order so results are reproducible regardless of thread count.
inline LossGrad compute_gradients(const ArchHyper& h, const ModelParams& p,
                                  const std::vector<const TrajectoryTensors*>& batch) {
  if (batch.empty()) throw invalid_input("compute_gradients: empty batch");
  std::vector<LossGrad> per(batch.size());
  parallel_for(batch.size(),
               [&](std::size_t b) { per[b] = trajectory_loss_grad(h, p, *batch[b]); });
  LossGrad total;
  total.loss = 0.0;
  total.grad = Eigen::VectorXd::Zero(param_count(h));
  for (const auto& lg : per) {
    total.loss += lg.loss;
    total.grad += lg.grad;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  total.grad *= inv;
  if (!std::isfinite(total.loss) || !total.grad.allFinite())
    throw numeric_error("compute_gradients: non-finite result", -1);
  return total;
}

/// Scores candidate parameters during training; smaller is better. The
/// production validator rolls the controller out and reports the control
/// cost; tests may substitute e.g. held-out MSE.
using Validator = std::function<double(const ArchHyper&, const ModelParams&)>;

/// Mean closed-loop cumulative cost over the validation initial conditions
/// (a failed rollout scores infinity, so it is never retained).
inline Validator make_rollout_validator(std::vector<SwarmState> initial_states,
                                        const FlockingConfig& cfg) {
  return [states = std::move(initial_states), cfg](const ArchHyper& h,
                                                   const ModelParams& p) {
    if (states.empty()) throw invalid_input("rollout validator: no initial states");
    std::vector<double> costs(states.size());
    parallel_for(states.size(), [&](std::size_t i) {
      LearnedPolicy policy(h, p);
      const Controller ctrl = [&policy](const SwarmState&, const ShiftOperator& s,
                                        const GraphSignal& x) { return policy.act(s, x); };
      const Trajectory tr = rollout(ctrl, states[i], cfg);
      costs[i] = tr.failed ? std::numeric_limits<double>::infinity() : tr.cumulative_cost();
    });
    double sum = 0.0;
    for (double c : costs) sum += c;
    return sum / static_cast<double>(states.size());
  };
}

inline std::vector<SwarmState> initial_states_of(const std::vector<Trajectory>& split) {
  std::vector<SwarmState> states;
  states.reserve(split.size());
  for (const auto& tr : split) {
    if (tr.steps.empty()) throw invalid_input("initial_states_of: empty trajectory");
    SwarmState st;
    st.positions = tr.steps[0].positions;
    st.velocities = tr.steps[0].velocities;
    states.push_back(std::move(st));
  }
  return states;
}

struct TrainLogEntry {
  long step = 0;
  double train_loss = 0.0;
  double val_cost = std::numeric_limits<double>::quiet_NaN();  // NaN = not validated
  double wall_time_s = 0.0;
};

struct TrainResult {
  ModelParams best;        // validation-selected checkpoint
  double best_val_cost = std::numeric_limits<double>::infinity();
  long best_step = 0;
  ModelParams final_params;
  std::vector<TrainLogEntry> log;
  bool diverged = false;
  std::string error;
};

/// Minibatch ADAM over expert trajectories. Epoch order is a deterministic
/// per-seed shuffle; every validate_every steps the validator scores the
/// current parameters and the best scorer is retained (falling back to the
/// final parameters when no validation ever ran). A non-finite or exploding
/// batch loss aborts with the last finite parameters and an error record.
inline TrainResult train_imitation(const std::vector<TrajectoryTensors>& train_set,
                                   const ArchHyper& hyper, const TrainConfig& cfg,
                                   const Validator& validator) {
  hyper.validate();
  cfg.validate();
  if (train_set.empty()) throw invalid_input("train_imitation: empty training set");
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  TrainResult res;
  ModelParams params = init_params(hyper, cfg.seed);
  Eigen::VectorXd theta = flatten(hyper, params);
  AdamState adam(theta.size());
  Rng shuffle_rng(mix_seed(cfg.seed, 0x7368756666ULL));  // "shuff"

  bool have_best = false;
  long step = 0;
  const auto validate_now = [&](double train_loss) {
    TrainLogEntry entry{step, train_loss, std::numeric_limits<double>::quiet_NaN(),
                        elapsed()};
    if (validator) {
      entry.val_cost = validator(hyper, params);
      if (!have_best || entry.val_cost < res.best_val_cost) {
        res.best = params;
        res.best_val_cost = entry.val_cost;
        res.best_step = step;
        have_best = true;
      }
    }
    res.log.push_back(entry);
  };

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs && !res.diverged; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t at = 0; at < order.size() && !res.diverged; at += cfg.batch_size) {
      std::vector<const TrajectoryTensors*> batch;
      for (std::size_t b = at; b < order.size() && b < at + cfg.batch_size; ++b)
        batch.push_back(&train_set[order[b]]);

      LossGrad lg;
      try {
        lg = compute_gradients(hyper, params, batch);
      } catch (const numeric_error& e) {
        res.diverged = true;
        res.error = std::string("aborted at step ") + std::to_string(step + 1) + ": " + e.what();
        break;
      }
      if (!std::isfinite(lg.loss) || lg.loss > cfg.divergence_threshold) {
        res.diverged = true;
        res.error = "aborted at step " + std::to_string(step + 1) +
                    ": loss diverged (" + std::to_string(lg.loss) + ")";
        break;
      }

      adam_step(adam, cfg.adam(), theta, lg.grad);
      params = unflatten(hyper, theta);
      ++step;
      if (step % cfg.validate_every == 0) validate_now(lg.loss);
      else {
        res.log.push_back(
            TrainLogEntry{step, lg.loss, std::numeric_limits<double>::quiet_NaN(), elapsed()});
      }
    }
  }

  res.final_params = params;
  if (!have_best) {
    res.best = params;
    res.best_val_cost = std::numeric_limits<double>::quiet_NaN();
    res.best_step = step;
  }
  return res;
}

/// The end-to-end form: trains on the dataset's train split and validates
/// by closed-loop rollout cost from the validation split's initial states.
inline TrainResult train_imitation(const Dataset& ds, const ArchHyper& hyper,
                                   const TrainConfig& cfg, const FlockingConfig& env) {
  if (ds.train.empty()) throw invalid_input("train_imitation: dataset has no train split");
  std::vector<TrajectoryTensors> tensors;
  tensors.reserve(ds.train.size());
  for (const auto& tr : ds.train) tensors.push_back(tr.tensors());
  Validator validator;
  if (!ds.validation.empty())
    validator = make_rollout_validator(initial_states_of(ds.validation), env);
  return train_imitation(tensors, hyper, cfg, validator);
}

inline void write_train_log_csv(const std::filesystem::path& path,
                                const std::vector<TrainLogEntry>& log) {
  atomic_write_file(path, [&](std::ostream& os) {
    os << "step,train_mse,val_cost,wall_time_s\n";
    os << std::setprecision(17);
    for (const auto& e : log) {
      os << e.step << ',' << e.train_loss << ',';
      if (std::isnan(e.val_cost)) os << "";
      else os << e.val_cost;
      os << ',' << e.wall_time_s << '\n';
    }
  });
}

/// Applies key=value overrides onto a TrainConfig (unknown keys are the
/// caller's concern; this reads only its own).
inline TrainConfig train_config_from_kv(const KvConfig& kv, TrainConfig base = {}) {
  base.epochs = static_cast<int>(kv.get_int("epochs", base.epochs));
  base.batch_size = static_cast<int>(kv.get_int("batch_size", base.batch_size));
  base.lr = kv.get_double("lr", base.lr);
  base.beta1 = kv.get_double("beta1", base.beta1);
  base.beta2 = kv.get_double("beta2", base.beta2);
  base.eps = kv.get_double("eps", base.eps);
  base.validate_every = static_cast<int>(kv.get_int("validate_every", base.validate_every));
  base.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(base.seed)));
  base.divergence_threshold =
      kv.get_double("divergence_threshold", base.divergence_threshold);
  return base;
}

inline FlockingConfig flocking_config_from_kv(const KvConfig& kv, FlockingConfig base = {}) {
  base.n = static_cast<int>(kv.get_int("n", base.n));
  base.t_s = kv.get_double("t_s", base.t_s);
  base.duration = kv.get_double("duration", base.duration);
  base.comm_radius = kv.get_double("comm_radius", base.comm_radius);
  base.ca_radius = kv.get_double("ca_radius", base.ca_radius);
  base.u_max = kv.get_double("u_max", base.u_max);
  base.v_init_max = kv.get_double("v_init_max", base.v_init_max);
  base.bias_max = kv.get_double("bias_max", base.bias_max);
  base.min_init_dist = kv.get_double("min_init_dist", base.min_init_dist);
  return base;
}

inline ArchHyper arch_hyper_from_kv(const KvConfig& kv, ArchHyper base = {}) {
  base.kind = arch_from_name(kv.get_string("arch", arch_name(base.kind)));
  base.f_in = static_cast<int>(kv.get_int("f_in", base.f_in));
  base.g = static_cast<int>(kv.get_int("g", base.g));
  base.f_out = static_cast<int>(kv.get_int("f_out", base.f_out));
  base.k = static_cast<int>(kv.get_int("k", base.k));
  base.k_out = static_cast<int>(kv.get_int("k_out", base.k_out));
  return base;
}

}  // namespace gnnctrl

#endif  // GNNCTRL_TRAIN_HPP
