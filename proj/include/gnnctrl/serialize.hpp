#ifndef GNNCTRL_SERIALIZE_HPP
#define GNNCTRL_SERIALIZE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "gnnctrl/arch.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/flocking.hpp"
#include "gnnctrl/trajectory.hpp"

// On-disk formats. All binary containers are raw little-endian (host
// x86-64) with u64 dimensions and f64 payloads; every file starts with an
// 8-byte magic. Writes land in a sibling temp file first and are renamed
// into place, so readers never see a half-written file.

namespace gnnctrl {

namespace io {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw invalid_input("io: truncated file (u64)");
  return v;
}

inline void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw invalid_input("io: truncated file (f64)");
  return v;
}

inline void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(os, m(r, c));
}

inline Eigen::MatrixXd get_matrix(std::istream& is) {
  const auto rows = static_cast<Eigen::Index>(get_u64(is));
  const auto cols = static_cast<Eigen::Index>(get_u64(is));
  if (rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24))
    throw invalid_input("io: implausible matrix dimensions");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(is);
  return m;
}

/// Adjacency as an edge list (i < j pairs); far smaller than the dense
/// matrix for the sparse proximity graphs the simulator produces.
inline void put_support(std::ostream& os, const ShiftOperator& s) {
  put_u64(os, static_cast<std::uint64_t>(s.n()));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (int i = 0; i < s.n(); ++i)
    for (int j = i + 1; j < s.n(); ++j)
      if (s.matrix(i, j) != 0.0)
        edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
  put_u64(os, edges.size());
  for (auto [i, j] : edges) {
    os.write(reinterpret_cast<const char*>(&i), sizeof i);
    os.write(reinterpret_cast<const char*>(&j), sizeof j);
  }
}

inline ShiftOperator get_support(std::istream& is) {
  const auto n = static_cast<int>(get_u64(is));
  const auto count = get_u64(is);
  ShiftOperator s;
  s.matrix = Eigen::MatrixXd::Zero(n, n);
  for (std::uint64_t e = 0; e < count; ++e) {
    std::uint32_t i = 0, j = 0;
    is.read(reinterpret_cast<char*>(&i), sizeof i);
    is.read(reinterpret_cast<char*>(&j), sizeof j);
    if (!is) throw invalid_input("io: truncated file (edge)");
    if (static_cast<int>(i) >= n || static_cast<int>(j) >= n)
      throw invalid_input("io: edge index out of range");
    s.matrix(i, j) = 1.0;
    s.matrix(j, i) = 1.0;
  }
  s.edge_count = static_cast<int>(count);
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[9]) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::string(buf, 8) != std::string(magic, 8))
    throw invalid_input(std::string("io: bad magic, expected ") + magic);
}

}  // namespace io

/// Writes via a temp sibling + rename so a crash never leaves a torn file.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::function<void(std::ostream&)>& fill) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw invalid_input("atomic_write_file: cannot open " + tmp.string());
    fill(os);
    if (!os) throw invalid_input("atomic_write_file: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---- config hashing ----

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string canonical_config_string(const FlockingConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "bias_max=" << cfg.bias_max << "\nca_radius=" << cfg.ca_radius
     << "\ncomm_radius=" << cfg.comm_radius << "\nduration=" << cfg.duration
     << "\nmin_init_dist=" << cfg.min_init_dist << "\nn=" << cfg.n << "\nt_s=" << cfg.t_s
     << "\nu_max=" << cfg.u_max << "\nv_init_max=" << cfg.v_init_max << "\n";
  return os.str();
}

inline std::uint64_t config_hash(const FlockingConfig& cfg) {
  return fnv1a(canonical_config_string(cfg));
}

inline void write_flocking_config(std::ostream& os, const FlockingConfig& cfg) {
  io::put_u64(os, static_cast<std::uint64_t>(cfg.n));
  io::put_f64(os, cfg.t_s);
  io::put_f64(os, cfg.duration);
  io::put_f64(os, cfg.comm_radius);
  io::put_f64(os, cfg.ca_radius);
  io::put_f64(os, cfg.u_max);
  io::put_f64(os, cfg.v_init_max);
  io::put_f64(os, cfg.bias_max);
  io::put_f64(os, cfg.min_init_dist);
}

inline FlockingConfig read_flocking_config(std::istream& is) {
  FlockingConfig cfg;
  cfg.n = static_cast<int>(io::get_u64(is));
  cfg.t_s = io::get_f64(is);
  cfg.duration = io::get_f64(is);
  cfg.comm_radius = io::get_f64(is);
  cfg.ca_radius = io::get_f64(is);
  cfg.u_max = io::get_f64(is);
  cfg.v_init_max = io::get_f64(is);
  cfg.bias_max = io::get_f64(is);
  cfg.min_init_dist = io::get_f64(is);
  return cfg;
}

// ---- checkpoints ----

inline void write_checkpoint(std::ostream& os, const ArchHyper& h, const ModelParams& p) {
  os.write("GNNCKPT1", 8);
  io::put_u64(os, static_cast<std::uint64_t>(h.kind));
  io::put_u64(os, static_cast<std::uint64_t>(h.f_in));
  io::put_u64(os, static_cast<std::uint64_t>(h.g));
  io::put_u64(os, static_cast<std::uint64_t>(h.f_out));
  io::put_u64(os, static_cast<std::uint64_t>(h.k));
  io::put_u64(os, static_cast<std::uint64_t>(h.k_out));
  const Eigen::VectorXd flat = flatten(h, p);
  io::put_u64(os, static_cast<std::uint64_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) io::put_f64(os, flat[i]);
}

inline std::pair<ArchHyper, ModelParams> read_checkpoint(std::istream& is) {
  io::expect_magic(is, "GNNCKPT1");
  ArchHyper h;
  const auto kind = io::get_u64(is);
  if (kind > 2) throw invalid_input("checkpoint: bad arch kind");
  h.kind = static_cast<ArchKind>(kind);
  h.f_in = static_cast<int>(io::get_u64(is));
  h.g = static_cast<int>(io::get_u64(is));
  h.f_out = static_cast<int>(io::get_u64(is));
  h.k = static_cast<int>(io::get_u64(is));
  h.k_out = static_cast<int>(io::get_u64(is));
  h.validate();
  const auto len = static_cast<Eigen::Index>(io::get_u64(is));
  if (len != param_count(h)) throw invalid_input("checkpoint: parameter count mismatch");
  Eigen::VectorXd flat(len);
  for (Eigen::Index i = 0; i < len; ++i) flat[i] = io::get_f64(is);
  return {h, unflatten(h, flat)};
}

inline void save_checkpoint(const std::filesystem::path& path, const ArchHyper& h,
                            const ModelParams& p) {
  atomic_write_file(path, [&](std::ostream& os) { write_checkpoint(os, h, p); });
}

inline std::pair<ArchHyper, ModelParams> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw invalid_input("load_checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

// ---- trajectories ----

inline void write_trajectory(std::ostream& os, const Trajectory& tr, std::uint64_t cfg_hash) {
  os.write("GNNTRAJ1", 8);
  io::put_u64(os, static_cast<std::uint64_t>(tr.agents()));
  io::put_u64(os, static_cast<std::uint64_t>(tr.length()));
  io::put_f64(os, tr.t_s);
  io::put_u64(os, cfg_hash);
  io::put_u64(os, tr.failed ? 1 : 0);
  io::put_u64(os, static_cast<std::uint64_t>(tr.failure_step + 1));  // 0 = no failure
  for (const auto& st : tr.steps) {
    io::put_support(os, st.support);
    io::put_matrix(os, st.positions);
    io::put_matrix(os, st.velocities);
    io::put_matrix(os, st.features);
    io::put_matrix(os, st.control);
    io::put_f64(os, st.cost);
  }
  io::put_matrix(os, tr.final_positions);
  io::put_matrix(os, tr.final_velocities);
  io::put_f64(os, tr.terminal_cost);
}

inline Trajectory read_trajectory(std::istream& is, std::uint64_t* cfg_hash_out = nullptr) {
  io::expect_magic(is, "GNNTRAJ1");
  const auto n = io::get_u64(is);
  const auto steps = io::get_u64(is);
  Trajectory tr;
  tr.t_s = io::get_f64(is);
  const auto hash = io::get_u64(is);
  if (cfg_hash_out) *cfg_hash_out = hash;
  tr.failed = io::get_u64(is) != 0;
  tr.failure_step = static_cast<int>(io::get_u64(is)) - 1;
  tr.steps.resize(steps);
  for (auto& st : tr.steps) {
    st.support = io::get_support(is);
    st.positions = io::get_matrix(is);
    st.velocities = io::get_matrix(is);
    st.features = io::get_matrix(is);
    st.control = io::get_matrix(is);
    st.cost = io::get_f64(is);
    if (st.positions.rows() != static_cast<Eigen::Index>(n))
      throw invalid_input("trajectory: agent count mismatch in step block");
  }
  tr.final_positions = io::get_matrix(is);
  tr.final_velocities = io::get_matrix(is);
  tr.terminal_cost = io::get_f64(is);
  return tr;
}

/// Long-format CSV: one row per (step, agent), plot-ready.
inline void export_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr) {
  atomic_write_file(path, [&](std::ostream& os) {
    os << "t,agent,pos_x,pos_y,vel_x,vel_y,u_x,u_y,step_cost\n";
    os << std::setprecision(17);
    for (int t = 0; t < tr.length(); ++t) {
      const auto& st = tr.steps[static_cast<std::size_t>(t)];
      for (Eigen::Index i = 0; i < st.positions.rows(); ++i)
        os << t << ',' << i << ',' << st.positions(i, 0) << ',' << st.positions(i, 1) << ','
           << st.velocities(i, 0) << ',' << st.velocities(i, 1) << ',' << st.control(i, 0)
           << ',' << st.control(i, 1) << ',' << st.cost << '\n';
    }
  });
}

// ---- datasets ----

/// The file embeds the full environment config so a consumer can rebuild the
/// exact rollout conditions (train/eval adopt it instead of guessing).
inline void save_dataset(const std::filesystem::path& path, const Dataset& ds,
                         const FlockingConfig& env) {
  const std::uint64_t cfg_hash = config_hash(env);
  atomic_write_file(path, [&](std::ostream& os) {
    os.write("GNNDSET2", 8);
    write_flocking_config(os, env);
    io::put_u64(os, cfg_hash);
    io::put_u64(os, ds.train.size());
    io::put_u64(os, ds.validation.size());
    io::put_u64(os, ds.test.size());
    for (const auto* split : {&ds.train, &ds.validation, &ds.test})
      for (const auto& tr : *split) write_trajectory(os, tr, cfg_hash);
  });
}

inline Dataset load_dataset(const std::filesystem::path& path,
                            FlockingConfig* env_out = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw invalid_input("load_dataset: cannot open " + path.string());
  io::expect_magic(is, "GNNDSET2");
  const FlockingConfig env = read_flocking_config(is);
  const auto hash = io::get_u64(is);
  if (hash != config_hash(env))
    throw invalid_input("load_dataset: stored config disagrees with its hash (corrupt file?)");
  if (env_out) *env_out = env;
  Dataset ds;
  const auto ntrain = io::get_u64(is);
  const auto nval = io::get_u64(is);
  const auto ntest = io::get_u64(is);
  ds.train.resize(ntrain);
  ds.validation.resize(nval);
  ds.test.resize(ntest);
  for (auto* split : {&ds.train, &ds.validation, &ds.test})
    for (auto& tr : *split) tr = read_trajectory(is);
  return ds;
}

}  // namespace gnnctrl

#endif  // GNNCTRL_SERIALIZE_HPP
