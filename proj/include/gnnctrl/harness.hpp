#ifndef GNNCTRL_HARNESS_HPP
#define GNNCTRL_HARNESS_HPP

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gnnctrl/arch.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/flocking.hpp"
#include "gnnctrl/parallel.hpp"
#include "gnnctrl/rng.hpp"
#include "gnnctrl/serialize.hpp"
#include "gnnctrl/train.hpp"
#include "gnnctrl/trajectory.hpp"

namespace gnnctrl {

/// Declarative description of one experiment run.
struct ExperimentSpec {
  std::string experiment_id = "sweep";  // sweep | init_velocity | comm_radius | transfer_scale
  std::vector<ArchKind> architectures = {ArchKind::gf, ArchKind::gcnn, ArchKind::grnn};
  std::vector<std::pair<int, int>> grid = {{16, 2}, {16, 3}, {16, 4}, {32, 2}, {32, 3},
                                           {32, 4}, {64, 2}, {64, 3}, {64, 4}};
  std::vector<double> scan;  // team sizes, radii, or velocity bounds, per experiment_id
  int realizations = 10;
  int train_count = 400;
  int val_count = 20;
  int test_count = 20;
  FlockingConfig env;
  TrainConfig train;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  double cell_time_budget_s = 7200.0;

  void validate() const {
    if (grid.empty()) throw config_error("experiment: empty (G,K) grid");
    if (architectures.empty()) throw config_error("experiment: no architectures");
    if (realizations < 1) throw config_error("experiment: realizations must be >= 1");
    if (train_count < 1 || val_count < 0 || test_count < 1)
      throw config_error("experiment: bad split counts");
    env.validate();
    train.validate();
    if (experiment_id != "sweep" && experiment_id != "init_velocity" &&
        experiment_id != "comm_radius" && experiment_id != "transfer_scale")
      throw config_error("experiment: unknown experiment_id '" + experiment_id + "'");
  }

  std::vector<double> effective_scan() const {
    if (!scan.empty()) return scan;
    if (experiment_id == "transfer_scale") return {50, 62, 75, 87, 100};
    if (experiment_id == "init_velocity") return {1, 2, 3, 4, 5};
    if (experiment_id == "comm_radius") return {1.5, 2.0, 2.5, 3.0};
    return {static_cast<double>(env.n)};
  }
};

/// One row of results.csv. Schema v1:
/// experiment_id,architecture,g,k,scan_value,mean_cost,std_cost,count,wall_time_s
struct ResultRecord {
  std::string experiment_id;
  std::string architecture;
  int g = 0;
  int k = 0;
  double scan_value = 0.0;
  double mean_cost = std::numeric_limits<double>::quiet_NaN();
  double std_cost = std::numeric_limits<double>::quiet_NaN();
  int count = 0;
  double wall_time_s = 0.0;
};

/// Expert demonstrations for one realization. Each trajectory comes from a
/// fresh initial condition; a collision during the expert rollout discards
/// that draw and tries the next attempt seed, so the result is deterministic
/// per (cfg, seed) regardless of how many draws were burned.
inline Dataset generate_dataset(const FlockingConfig& cfg, int train_n, int val_n, int test_n,
                                std::uint64_t seed, long* resamples = nullptr) {
  cfg.validate();
  if (train_n < 1 || val_n < 0 || test_n < 0)
    throw config_error("generate_dataset: bad split counts");
  const int total = train_n + val_n + test_n;
  std::vector<Trajectory> all(static_cast<std::size_t>(total));
  std::vector<long> burned(static_cast<std::size_t>(total), 0);
  const Controller expert = expert_controller(cfg);
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t idx) {
    for (long attempt = 0;; ++attempt) {
      if (attempt >= 100)
        throw config_error("generate_dataset: 100 failed rollouts for one slot");
      const std::uint64_t s = mix_seed(mix_seed(seed, idx), static_cast<std::uint64_t>(attempt));
      const SwarmState init = sample_initial_conditions(cfg, s);
      Trajectory tr = rollout(expert, init, cfg);
      if (!tr.failed) {
        all[idx] = std::move(tr);
        burned[idx] = attempt;
        return;
      }
    }
  });
  if (resamples) {
    *resamples = 0;
    for (long b : burned) *resamples += b;
  }
  Dataset ds;
  ds.train.assign(all.begin(), all.begin() + train_n);
  ds.validation.assign(all.begin() + train_n, all.begin() + train_n + val_n);
  ds.test.assign(all.begin() + train_n + val_n, all.end());
  return ds;
}

struct EvalResult {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  int evaluated = 0;
  int failed = 0;
  std::vector<double> ratios;  // per surviving initial condition
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty())
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

/// Builds a fresh controller per episode (stateful policies must not leak
/// history across rollouts).
using ControllerFactory = std::function<Controller()>;

inline ControllerFactory policy_factory(const ArchHyper& hyper, const ModelParams& params) {
  return [hyper, params]() -> Controller {
    auto policy = std::make_shared<LearnedPolicy>(hyper, params);
    return [policy](const SwarmState&, const ShiftOperator& s, const GraphSignal& x) {
      return policy->act(s, x);
    };
  };
}

/// Normalized closed-loop cost of a controller: for every test initial
/// condition, roll out both the controller and the expert from the
/// identical state, take the ratio of cumulative costs, then average the
/// ratios. Failed rollouts are excluded and counted.
inline EvalResult evaluate_controller(const ControllerFactory& make,
                                      const std::vector<SwarmState>& test_states,
                                      const FlockingConfig& cfg) {
  if (test_states.empty()) throw invalid_input("evaluate_controller: no test states");
  const Controller expert = expert_controller(cfg);
  std::vector<double> ratio(test_states.size(),
                            std::numeric_limits<double>::quiet_NaN());
  parallel_for(test_states.size(), [&](std::size_t i) {
    const Trajectory expert_tr = rollout(expert, test_states[i], cfg);
    if (expert_tr.failed || expert_tr.cumulative_cost() < 1e-12) return;
    const Trajectory tr = rollout(make(), test_states[i], cfg);
    if (tr.failed) return;
    ratio[i] = tr.cumulative_cost() / expert_tr.cumulative_cost();
  });
  EvalResult res;
  for (double r : ratio) {
    if (std::isnan(r)) ++res.failed;
    else res.ratios.push_back(r);
  }
  res.evaluated = static_cast<int>(res.ratios.size());
  std::tie(res.mean, res.stddev) = detail::mean_std(res.ratios);
  return res;
}

inline EvalResult evaluate_policy(const ArchHyper& hyper, const ModelParams& params,
                                  const std::vector<SwarmState>& test_states,
                                  const FlockingConfig& cfg) {
  return evaluate_controller(policy_factory(hyper, params), test_states, cfg);
}

inline void write_results_csv(const std::filesystem::path& path,
                              const std::vector<ResultRecord>& records) {
  atomic_write_file(path, [&](std::ostream& os) {
    os << "experiment_id,architecture,g,k,scan_value,mean_cost,std_cost,count,wall_time_s\n";
    os << std::setprecision(17);
    for (const auto& r : records)
      os << r.experiment_id << ',' << r.architecture << ',' << r.g << ',' << r.k << ','
         << r.scan_value << ',' << r.mean_cost << ',' << r.std_cost << ',' << r.count << ','
         << r.wall_time_s << '\n';
  });
}

namespace detail {

inline std::string json_num(double v) {
  if (std::isnan(v)) return "null";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Machine-readable companion to results.csv (same content plus the best
/// grid cell per architecture by mean cost).
inline void write_summary_json(const std::filesystem::path& path, const ExperimentSpec& spec,
                               const std::vector<ResultRecord>& records) {
  atomic_write_file(path, [&](std::ostream& os) {
    os << "{\n  \"schema_version\": 1,\n";
    os << "  \"experiment_id\": \"" << spec.experiment_id << "\",\n";
    os << "  \"seed\": " << spec.seed << ",\n";
    os << "  \"realizations\": " << spec.realizations << ",\n";
    os << "  \"records\": [\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      os << "    {\"architecture\": \"" << r.architecture << "\", \"g\": " << r.g
         << ", \"k\": " << r.k << ", \"scan_value\": " << detail::json_num(r.scan_value)
         << ", \"mean_cost\": " << detail::json_num(r.mean_cost)
         << ", \"std_cost\": " << detail::json_num(r.std_cost) << ", \"count\": " << r.count
         << ", \"wall_time_s\": " << detail::json_num(r.wall_time_s) << "}"
         << (i + 1 < records.size() ? ",\n" : "\n");
    }
    os << "  ],\n  \"best_by_architecture\": {\n";
    std::map<std::string, const ResultRecord*> best;
    for (const auto& r : records) {
      if (r.count == 0 || std::isnan(r.mean_cost)) continue;
      auto it = best.find(r.architecture);
      if (it == best.end() || r.mean_cost < it->second->mean_cost) best[r.architecture] = &r;
    }
    std::size_t i = 0;
    for (const auto& [name, r] : best) {
      os << "    \"" << name << "\": {\"g\": " << r->g << ", \"k\": " << r->k
         << ", \"mean_cost\": " << detail::json_num(r->mean_cost) << "}"
         << (++i < best.size() ? ",\n" : "\n");
    }
    os << "  }\n}\n";
  });
}

namespace detail {

inline std::string cell_label(ArchKind arch, int g, int k) {
  return arch_name(arch) + "_g" + std::to_string(g) + "_k" + std::to_string(k);
}

/// Loads the cached dataset for one realization or generates and caches it.
/// Shared by every grid cell of that realization.
inline Dataset realization_dataset(const ExperimentSpec& spec, int realization) {
  const std::uint64_t ds_seed = mix_seed(mix_seed(spec.seed, 0x64736574ULL), // "dset"
                                         static_cast<std::uint64_t>(realization));
  std::ostringstream name;
  name << "ds_" << std::hex << config_hash(spec.env) << "_" << ds_seed << std::dec << "_"
       << spec.train_count << "_" << spec.val_count << "_" << spec.test_count << ".bin";
  const auto cache = spec.out_dir / "datasets" / name.str();
  if (std::filesystem::exists(cache)) return load_dataset(cache);
  Dataset ds = generate_dataset(spec.env, spec.train_count, spec.val_count, spec.test_count,
                                ds_seed);
  save_dataset(cache, ds, spec.env);
  return ds;
}

struct CellRun {
  ModelParams params;
  bool ok = false;
  std::string note;
};

/// Train one grid cell on one realization's dataset; persists checkpoint
/// and training log.
inline CellRun train_cell(const ExperimentSpec& spec, const Dataset& ds, ArchKind arch, int g,
                          int k, int realization) {
  ArchHyper hyper;
  hyper.kind = arch;
  hyper.g = g;
  hyper.k = k;
  TrainConfig tc = spec.train;
  const std::string label = cell_label(arch, g, k);
  tc.seed = mix_seed(mix_seed(spec.train.seed, fnv1a(label)),
                     static_cast<std::uint64_t>(realization));
  TrainResult tr = train_imitation(ds, hyper, tc, spec.env);
  const std::string stem = label + "_r" + std::to_string(realization);
  write_train_log_csv(spec.out_dir / "train_logs" / (stem + ".csv"), tr.log);
  CellRun run;
  if (tr.diverged) {
    run.ok = false;
    run.note = tr.error;
    return run;
  }
  run.params = tr.best;
  run.ok = true;
  save_checkpoint(spec.out_dir / "checkpoints" / (stem + ".ckpt"), hyper, run.params);
  return run;
}

}  // namespace detail

/// The hyperparameter sweep: architectures x (G,K) grid x realizations,
/// trained and evaluated on per-realization datasets (shared across cells),
/// aggregated into one record per cell. Per-cell failures are recorded and
/// the sweep continues; a per-cell wall-clock budget stops further
/// realizations of a cell that runs long.
inline std::vector<ResultRecord> run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::create_directories(spec.out_dir);

  struct CellAgg {
    std::vector<double> means;
    double wall = 0.0;
  };
  std::map<std::string, CellAgg> agg;

  for (int r = 0; r < spec.realizations; ++r) {
    const Dataset ds = detail::realization_dataset(spec, r);
    const std::vector<SwarmState> test_states = initial_states_of(ds.test);
    for (ArchKind arch : spec.architectures) {
      for (const auto& [g, k] : spec.grid) {
        const std::string label = detail::cell_label(arch, g, k);
        auto& cell = agg[label];
        if (cell.wall > spec.cell_time_budget_s) continue;  // budget guard
        const auto t0 = std::chrono::steady_clock::now();
        detail::CellRun run = detail::train_cell(spec, ds, arch, g, k, r);
        if (run.ok) {
          ArchHyper hyper;
          hyper.kind = arch;
          hyper.g = g;
          hyper.k = k;
          const EvalResult ev = evaluate_policy(hyper, run.params, test_states, spec.env);
          if (ev.evaluated > 0) cell.means.push_back(ev.mean);
        }
        cell.wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    }
  }

  std::vector<ResultRecord> records;
  for (ArchKind arch : spec.architectures) {
    for (const auto& [g, k] : spec.grid) {
      const auto& cell = agg[detail::cell_label(arch, g, k)];
      ResultRecord rec;
      rec.experiment_id = spec.experiment_id;
      rec.architecture = arch_name(arch);
      rec.g = g;
      rec.k = k;
      rec.scan_value = static_cast<double>(spec.env.n);
      std::tie(rec.mean_cost, rec.std_cost) = detail::mean_std(cell.means);
      rec.count = static_cast<int>(cell.means.size());
      rec.wall_time_s = cell.wall;
      records.push_back(std::move(rec));
    }
  }
  write_results_csv(spec.out_dir / "results.csv", records);
  write_summary_json(spec.out_dir / "summary.json", spec, records);
  return records;
}

/// Robustness/transference runs: train every cell at the base configuration,
/// then evaluate the same parameters on scanned conditions — team size for
/// transfer_scale, initial-velocity bound, or communication radius — with
/// fresh initial conditions per scan point. No retraining happens between
/// scan points; the persisted checkpoint is shared.
inline std::vector<ResultRecord> run_transfer(const ExperimentSpec& spec) {
  spec.validate();
  std::filesystem::create_directories(spec.out_dir);
  const std::vector<double> scan = spec.effective_scan();

  struct ScanAgg {
    std::vector<double> means;
    double wall = 0.0;
  };
  std::map<std::string, std::map<std::size_t, ScanAgg>> agg;

  for (int r = 0; r < spec.realizations; ++r) {
    const Dataset ds = detail::realization_dataset(spec, r);
    for (ArchKind arch : spec.architectures) {
      for (const auto& [g, k] : spec.grid) {
        const std::string label = detail::cell_label(arch, g, k);
        const auto t0 = std::chrono::steady_clock::now();
        detail::CellRun run = detail::train_cell(spec, ds, arch, g, k, r);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (std::size_t si = 0; si < scan.size(); ++si) {
          FlockingConfig env = spec.env;
          if (spec.experiment_id == "transfer_scale")
            env.n = static_cast<int>(std::lround(scan[si]));
          else if (spec.experiment_id == "init_velocity")
            env.v_init_max = scan[si];
          else if (spec.experiment_id == "comm_radius")
            env.comm_radius = scan[si];
          env.validate();
          auto& slot = agg[label][si];
          if (!run.ok) continue;
          const auto t1 = std::chrono::steady_clock::now();
          // Scan states skip the connectivity conditioning: it is infeasible
          // at the larger team sizes (see sample_initial_conditions) and the
          // normalized cost is expert-relative either way. One convention
          // across the whole scan keeps the points comparable.
          std::vector<SwarmState> states(static_cast<std::size_t>(spec.test_count));
          for (int i = 0; i < spec.test_count; ++i)
            states[static_cast<std::size_t>(i)] = sample_initial_conditions(
                env, mix_seed(mix_seed(mix_seed(spec.seed, 0x7363616eULL),  // "scan"
                                       static_cast<std::uint64_t>(si)),
                              static_cast<std::uint64_t>(r * 100003 + i)),
                /*require_connected=*/false);
          ArchHyper hyper;
          hyper.kind = arch;
          hyper.g = g;
          hyper.k = k;
          const EvalResult ev = evaluate_policy(hyper, run.params, states, env);
          if (ev.evaluated > 0) slot.means.push_back(ev.mean);
          slot.wall +=
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
        }
        agg[label][0].wall += wall;  // attribute training time to the first scan point
      }
    }
  }

  std::vector<ResultRecord> records;
  for (ArchKind arch : spec.architectures) {
    for (const auto& [g, k] : spec.grid) {
      for (std::size_t si = 0; si < scan.size(); ++si) {
        const auto& slot = agg[detail::cell_label(arch, g, k)][si];
        ResultRecord rec;
        rec.experiment_id = spec.experiment_id;
        rec.architecture = arch_name(arch);
        rec.g = g;
        rec.k = k;
        rec.scan_value = scan[si];
        std::tie(rec.mean_cost, rec.std_cost) = detail::mean_std(slot.means);
        rec.count = static_cast<int>(slot.means.size());
        rec.wall_time_s = slot.wall;
        records.push_back(std::move(rec));
      }
    }
  }
  write_results_csv(spec.out_dir / "results.csv", records);
  write_summary_json(spec.out_dir / "summary.json", spec, records);
  return records;
}

}  // namespace gnnctrl

#endif  // GNNCTRL_HARNESS_HPP
