// Command-line front end: dataset generation, imitation training,
// closed-loop evaluation, the hyperparameter sweep and transference
// experiments, plus randomized self-checks. Options come from an optional
// key=value config file with --key value flags layered on top.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gnnctrl/gnnctrl.hpp"

using namespace gnnctrl;
namespace fs = std::filesystem;

namespace {

int usage(const char* argv0) {
  std::printf(
      "usage: %s <command> [--config FILE] [--KEY VALUE]...\n"
      "\n"
      "commands:\n"
      "  dataset    sample expert trajectories and write a dataset file\n"
      "  train      train one architecture on expert trajectories\n"
      "  eval       score a checkpoint against the expert, closed loop\n"
      "  sweep      architectures x (G,K) grid, aggregated over realizations\n"
      "  transfer   train at the base config, evaluate across a scanned condition\n"
      "  proptest   randomized self-checks of the core identities\n"
      "\n"
      "Any --KEY VALUE pair overrides the same key from --config. Common keys:\n"
      "  env:      n t_s duration comm_radius ca_radius u_max v_init_max bias_max\n"
      "  model:    arch (gf|gcnn|grnn) g k k_out\n"
      "  training: epochs batch_size lr validate_every seed\n"
      "  splits:   train_count val_count test_count\n"
      "  output:   out (file or directory, command dependent)\n"
      "\n"
      "examples:\n"
      "  %s dataset --n 50 --train_count 400 --out out/flock.bin\n"
      "  %s train --dataset out/flock.bin --arch gcnn --g 32 --k 3 --out out/gcnn\n"
      "  %s eval --checkpoint out/gcnn/best.ckpt --count 20\n"
      "  %s transfer --experiment transfer_scale --scan 50,62,75,87,100\n",
      argv0, argv0, argv0, argv0, argv0);
  return 2;
}

/// Config files first, then flags, so a flag beats the file no matter where
/// it sits on the command line. Within each layer, later wins.
KvConfig parse_args(int argc, char** argv, int first) {
  std::vector<std::pair<std::string, std::string>> flags;
  KvConfig kv;
  for (int i = first; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) != 0)
      throw config_error("expected --KEY VALUE pairs, got '" + a + "'");
    a = a.substr(2);
    if (i + 1 >= argc) throw config_error("flag --" + a + " needs a value");
    const std::string val = argv[++i];
    if (a == "config") {
      for (const auto& [k, v] : KvConfig::from_file(val).values()) kv.set(k, v);
    } else {
      flags.emplace_back(a, val);
    }
  }
  for (const auto& [k, v] : flags) kv.set(k, v);
  return kv;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<ArchKind> parse_archs(const std::string& s) {
  std::vector<ArchKind> kinds;
  for (const auto& tok : split_csv(s)) kinds.push_back(arch_from_name(tok));
  return kinds;
}

std::vector<std::pair<int, int>> parse_grid(const std::string& s) {
  std::vector<std::pair<int, int>> grid;
  for (const auto& tok : split_csv(s)) {
    const auto x = tok.find('x');
    if (x == std::string::npos)
      throw config_error("grid cell '" + tok + "' is not of the form GxK");
    try {
      grid.emplace_back(std::stoi(tok.substr(0, x)), std::stoi(tok.substr(x + 1)));
    } catch (...) {
      throw config_error("grid cell '" + tok + "' is not of the form GxK");
    }
  }
  return grid;
}

std::vector<double> parse_scan(const std::string& s) {
  std::vector<double> scan;
  for (const auto& tok : split_csv(s)) {
    try {
      std::size_t used = 0;
      scan.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw config_error("");
    } catch (...) {
      throw config_error("scan value '" + tok + "' is not a number");
    }
  }
  return scan;
}

ExperimentSpec spec_from_kv(const KvConfig& kv, const std::string& experiment_id) {
  ExperimentSpec spec;
  spec.experiment_id = kv.get_string("experiment", experiment_id);
  spec.env = flocking_config_from_kv(kv);
  spec.train = train_config_from_kv(kv);
  if (kv.has("archs")) spec.architectures = parse_archs(kv.get_string("archs", ""));
  if (kv.has("grid")) spec.grid = parse_grid(kv.get_string("grid", ""));
  if (kv.has("scan")) spec.scan = parse_scan(kv.get_string("scan", ""));
  spec.realizations = static_cast<int>(kv.get_int("realizations", spec.realizations));
  spec.train_count = static_cast<int>(kv.get_int("train_count", spec.train_count));
  spec.val_count = static_cast<int>(kv.get_int("val_count", spec.val_count));
  spec.test_count = static_cast<int>(kv.get_int("test_count", spec.test_count));
  spec.out_dir = kv.get_string("out", "out/" + spec.experiment_id);
  spec.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  spec.train.seed = spec.seed;
  spec.cell_time_budget_s = kv.get_double("budget_s", spec.cell_time_budget_s);
  return spec;
}

void print_records(const std::vector<ResultRecord>& records) {
  std::printf("%-6s %4s %3s %10s %12s %12s %6s %10s\n", "arch", "G", "K", "scan",
              "mean_cost", "std_cost", "count", "wall_s");
  for (const auto& r : records)
    std::printf("%-6s %4d %3d %10.4g %12.6g %12.6g %6d %10.2f\n", r.architecture.c_str(),
                r.g, r.k, r.scan_value, r.mean_cost, r.std_cost, r.count, r.wall_time_s);
}

int cmd_dataset(const KvConfig& kv) {
  const FlockingConfig env = flocking_config_from_kv(kv);
  const int train_n = static_cast<int>(kv.get_int("train_count", 400));
  const int val_n = static_cast<int>(kv.get_int("val_count", 20));
  const int test_n = static_cast<int>(kv.get_int("test_count", 20));
  const auto seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  const fs::path out = kv.get_string("out", "out/dataset.bin");

  std::printf("sampling %d trajectories (N=%d, T=%d)...\n", train_n + val_n + test_n, env.n,
              env.steps());
  long resamples = 0;
  const Dataset ds = generate_dataset(env, train_n, val_n, test_n, seed, &resamples);
  save_dataset(out, ds, env);

  double mean_cost = 0.0;
  for (const auto& tr : ds.train) mean_cost += tr.cumulative_cost();
  mean_cost /= static_cast<double>(ds.train.size());
  std::printf("wrote %s (train=%zu val=%zu test=%zu, %ld discarded draws)\n",
              out.string().c_str(), ds.train.size(), ds.validation.size(), ds.test.size(),
              resamples);
  std::printf("expert cumulative cost, train split mean: %.4f\n", mean_cost);

  if (kv.has("csv")) {
    export_trajectory_csv(kv.get_string("csv", ""), ds.train.front());
    std::printf("exported first training trajectory to %s\n",
                kv.get_string("csv", "").c_str());
  }
  return 0;
}

int cmd_train(const KvConfig& kv) {
  const ArchHyper hyper = arch_hyper_from_kv(kv);
  const TrainConfig tc = train_config_from_kv(kv);

  FlockingConfig env;
  Dataset ds;
  if (kv.has("dataset")) {
    FlockingConfig file_env;
    ds = load_dataset(kv.get_string("dataset", ""), &file_env);
    // the file knows the environment it was sampled under; explicit
    // command-line keys still win
    env = flocking_config_from_kv(kv, file_env);
    if (config_hash(env) != config_hash(file_env))
      std::printf("note: command-line keys override the dataset's stored environment\n");
    else
      std::printf("environment from dataset: N=%d, T=%d\n", env.n, env.steps());
  } else {
    env = flocking_config_from_kv(kv);
    const int train_n = static_cast<int>(kv.get_int("train_count", 400));
    const int val_n = static_cast<int>(kv.get_int("val_count", 20));
    std::printf("no --dataset given; sampling %d trajectories...\n", train_n + val_n);
    ds = generate_dataset(env, train_n, val_n, 0, tc.seed);
  }
  ds.validate();

  const fs::path out = kv.get_string("out", "out/train_" + arch_name(hyper.kind));
  std::printf("training %s (G=%d K=%d, %ld parameters) on %zu trajectories\n",
              arch_name(hyper.kind).c_str(), hyper.g, hyper.k, param_count(hyper),
              ds.train.size());

  const TrainResult res = train_imitation(ds, hyper, tc, env);
  write_train_log_csv(out / "train_log.csv", res.log);
  save_checkpoint(out / "best.ckpt", hyper, res.best);
  save_checkpoint(out / "final.ckpt", hyper, res.final_params);

  if (res.diverged) {
    std::printf("training diverged: %s\n", res.error.c_str());
    std::printf("last finite parameters kept in %s\n", (out / "final.ckpt").string().c_str());
    return 1;
  }
  const double last_loss = res.log.empty() ? 0.0 : res.log.back().train_loss;
  std::printf("done: %zu steps, final train MSE %.6g\n", res.log.size(), last_loss);
  if (std::isfinite(res.best_val_cost))
    std::printf("best validation cost %.6g at step %ld -> %s\n", res.best_val_cost,
                res.best_step, (out / "best.ckpt").string().c_str());
  return 0;
}

int cmd_eval(const KvConfig& kv) {
  if (!kv.has("checkpoint")) throw config_error("eval: --checkpoint is required");
  const auto [hyper, params] = load_checkpoint(kv.get_string("checkpoint", ""));
  FlockingConfig env = flocking_config_from_kv(kv);

  std::vector<SwarmState> states;
  if (kv.has("dataset")) {
    FlockingConfig file_env;
    const Dataset ds = load_dataset(kv.get_string("dataset", ""), &file_env);
    env = flocking_config_from_kv(kv, file_env);
    const auto& split = !ds.test.empty() ? ds.test : ds.validation;
    if (split.empty()) throw config_error("eval: dataset has no test or validation split");
    states = initial_states_of(split);
  } else {
    const int count = static_cast<int>(kv.get_int("count", 20));
    const auto seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    for (int i = 0; i < count; ++i)
      states.push_back(sample_initial_conditions(
          env, mix_seed(seed, static_cast<std::uint64_t>(i))));
  }

  std::printf("evaluating %s (G=%d K=%d) on %zu initial conditions (N=%d)\n",
              arch_name(hyper.kind).c_str(), hyper.g, hyper.k, states.size(), env.n);
  const EvalResult ev = evaluate_policy(hyper, params, states, env);
  std::printf("normalized cost: mean %.4f, std %.4f (%d evaluated, %d failed)\n", ev.mean,
              ev.stddev, ev.evaluated, ev.failed);

  if (kv.has("out")) {
    atomic_write_file(kv.get_string("out", ""), [&](std::ostream& os) {
      os << "ratio\n" << std::setprecision(17);
      for (double r : ev.ratios) os << r << "\n";
    });
  }
  return 0;
}

int cmd_sweep(const KvConfig& kv) {
  const ExperimentSpec spec = spec_from_kv(kv, "sweep");
  std::printf("sweep: %zu architectures x %zu cells x %d realizations (N=%d)\n",
              spec.architectures.size(), spec.grid.size(), spec.realizations, spec.env.n);
  const auto records = run_sweep(spec);
  print_records(records);
  std::printf("results in %s\n", (spec.out_dir / "results.csv").string().c_str());
  return 0;
}

int cmd_transfer(const KvConfig& kv) {
  const ExperimentSpec spec = spec_from_kv(kv, "transfer_scale");
  std::printf("%s: train at N=%d, evaluate at %zu scan points, %d realizations\n",
              spec.experiment_id.c_str(), spec.env.n, spec.effective_scan().size(),
              spec.realizations);
  const auto records = run_transfer(spec);
  print_records(records);
  std::printf("results in %s\n", (spec.out_dir / "results.csv").string().c_str());
  return 0;
}

// ---- randomized self-checks ----

struct PropResult {
  const char* name;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = true;
};

void report(std::vector<PropResult>& all, PropResult r, int trials) {
  r.pass = r.max_err <= r.tol;
  std::printf("%-44s trials=%-4d max_err=%-12.3g tol=%-8.0e %s\n", r.name, trials, r.max_err,
              r.tol, r.pass ? "PASS" : "FAIL");
  all.push_back(r);
}

int cmd_proptest(const KvConfig& kv) {
  const int trials = static_cast<int>(kv.get_int("trials", 100));
  const auto seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  Rng rng(mix_seed(seed, 0x70726f70ULL));
  std::vector<PropResult> all;

  const auto random_support = [&rng](int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.4) m(i, j) = m(j, i) = 1.0;
    return ShiftOperator(std::move(m));
  };
  const auto random_signal = [&rng](int n, int f) {
    GraphSignal x(n, f);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < f; ++j) x(i, j) = rng.symmetric(1.0);
    return x;
  };
  const auto random_hyper = [&rng](ArchKind kind) {
    ArchHyper h;
    h.kind = kind;
    h.f_in = 2 + static_cast<int>(rng.below(3));
    h.g = 2 + static_cast<int>(rng.below(4));
    h.f_out = 1 + static_cast<int>(rng.below(3));
    h.k = static_cast<int>(rng.below(4));
    return h;
  };

  {  // permutation equivariance of the static filter
    PropResult r{"static filter permutation equivariance"};
    r.tol = 1e-9;
    for (int t = 0; t < trials; ++t) {
      const int n = 4 + static_cast<int>(rng.below(9));
      const ArchHyper h = random_hyper(ArchKind::gcnn);
      const ModelParams p = init_params(h, rng.raw());
      const ShiftOperator s = random_support(n);
      const GraphSignal x = random_signal(n, h.f_in);
      std::vector<int> idx(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
      rng.shuffle(idx);
      const Permutation perm(idx);
      const GraphSignal lhs = apply_filter(p.input, permute_shift(perm, s),
                                           permute_signal(perm, x));
      const GraphSignal rhs = permute_signal(perm, apply_filter(p.input, s, x));
      r.max_err = std::max(r.max_err, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    report(all, r, trials);
  }

  {  // dense policy vs per-node message passing, all architectures
    PropResult r{"dense vs per-node controller agreement"};
    r.tol = 1e-10;
    for (int t = 0; t < trials; ++t) {
      const ArchKind kind = static_cast<ArchKind>(rng.below(3));
      const ArchHyper h = random_hyper(kind);
      const ModelParams p = init_params(h, rng.raw());
      const int n = 4 + static_cast<int>(rng.below(7));
      const int steps = 2 + static_cast<int>(rng.below(5));
      std::vector<ShiftOperator> supports;
      std::vector<GraphSignal> signals;
      for (int i = 0; i < steps; ++i) {
        supports.push_back(random_support(n));
        signals.push_back(random_signal(n, h.f_in));
      }
      LearnedPolicy dense(h, p);
      const auto node_out = run_node_network(h, p, supports, signals);
      for (int i = 0; i < steps; ++i) {
        const GraphSignal u = dense.act(supports[static_cast<std::size_t>(i)],
                                        signals[static_cast<std::size_t>(i)]);
        r.max_err = std::max(
            r.max_err, (u - node_out[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff());
      }
    }
    report(all, r, trials);
  }

  {  // analytic gradient vs central differences
    PropResult r{"backprop gradient vs finite differences"};
    r.tol = 1e-4;  // relative
    const int grad_trials = std::max(1, trials / 10);
    for (int t = 0; t < grad_trials; ++t) {
      const ArchKind kind = static_cast<ArchKind>(rng.below(3));
      ArchHyper h = random_hyper(kind);
      h.k = std::min(h.k, 2);
      const int n = 5;
      const int steps = 4;
      TrajectoryTensors tt;
      for (int i = 0; i < steps; ++i) {
        tt.supports.push_back(random_support(n));
        tt.features.push_back(random_signal(n, h.f_in));
        tt.targets.push_back(random_signal(n, h.f_out));
      }
      const Eigen::VectorXd at = flatten(h, init_params(h, rng.raw()));
      const Eigen::VectorXd g = trajectory_loss_grad(h, unflatten(h, at), tt).grad;
      const Eigen::VectorXd fd = finite_difference_gradient(
          [&](const Eigen::VectorXd& v) {
            return trajectory_loss_grad(h, unflatten(h, v), tt).loss;
          },
          at, 1e-5);
      const double rel = (g - fd).norm() / std::max(1e-12, fd.norm());
      r.max_err = std::max(r.max_err, rel);
    }
    report(all, r, grad_trials);
  }

  {  // checkpoints round-trip bit for bit
    PropResult r{"checkpoint serialization round-trip"};
    r.tol = 0.0;
    for (int t = 0; t < trials; ++t) {
      const ArchHyper h = random_hyper(static_cast<ArchKind>(rng.below(3)));
      const ModelParams p = init_params(h, rng.raw());
      std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
      write_checkpoint(ss, h, p);
      const auto [h2, p2] = read_checkpoint(ss);
      r.max_err = std::max(r.max_err,
                           (flatten(h2, p2) - flatten(h, p)).cwiseAbs().maxCoeff());
    }
    report(all, r, trials);
  }

  {  // simulator determinism per seed
    PropResult r{"rollout determinism per seed"};
    r.tol = 0.0;
    const int sim_trials = std::max(1, trials / 20);
    FlockingConfig cfg;
    cfg.n = 8;
    cfg.duration = 0.25;
    for (int t = 0; t < sim_trials; ++t) {
      const std::uint64_t s = rng.raw();
      const Trajectory a = rollout(expert_controller(cfg), sample_initial_conditions(cfg, s), cfg);
      const Trajectory b = rollout(expert_controller(cfg), sample_initial_conditions(cfg, s), cfg);
      r.max_err = std::max(r.max_err, std::abs(a.cumulative_cost() - b.cumulative_cost()));
    }
    report(all, r, sim_trials);
  }

  {  // proximity graph definition
    PropResult r{"disk graph matches pairwise distances"};
    r.tol = 0.0;
    for (int t = 0; t < trials; ++t) {
      const int n = 3 + static_cast<int>(rng.below(10));
      Eigen::MatrixXd pos(n, 2);
      for (int i = 0; i < n; ++i) {
        pos(i, 0) = rng.symmetric(3.0);
        pos(i, 1) = rng.symmetric(3.0);
      }
      const double radius = 0.5 + rng.uniform() * 3.0;
      const ShiftOperator s = build_disk_graph(pos, radius);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double want =
              (i != j && (pos.row(i) - pos.row(j)).norm() <= radius) ? 1.0 : 0.0;
          r.max_err = std::max(r.max_err, std::abs(s.matrix(i, j) - want));
        }
    }
    report(all, r, trials);
  }

  int failures = 0;
  for (const auto& r : all)
    if (!r.pass) ++failures;
  std::printf("%zu properties, %d failing\n", all.size(), failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(argv[0]);
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") return usage(argv[0]);
  try {
    const KvConfig kv = parse_args(argc, argv, 2);
    if (cmd == "dataset") return cmd_dataset(kv);
    if (cmd == "train") return cmd_train(kv);
    if (cmd == "eval") return cmd_eval(kv);
    if (cmd == "sweep") return cmd_sweep(kv);
    if (cmd == "transfer") return cmd_transfer(kv);
    if (cmd == "proptest") return cmd_proptest(kv);
    std::fprintf(stderr, "unknown command '%s'\n", cmd.c_str());
    return usage(argv[0]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
