#ifndef GNNCTRL_GRAPH_HPP
#define GNNCTRL_GRAPH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "gnnctrl/errors.hpp"

namespace gnnctrl {

/// A graph signal: row i is agent i's feature vector.
using GraphSignal = Eigen::MatrixXd;

/// Symmetric N x N support matrix whose zero pattern matches non-edges.
/// The concrete choice here is the binary adjacency matrix: entries in
/// {0, 1}, zero diagonal. Dense storage; the teams handled by this library
/// are small (N of order 10^2).
struct ShiftOperator {
  Eigen::MatrixXd matrix;
  int edge_count = 0;

  ShiftOperator() = default;
  explicit ShiftOperator(Eigen::MatrixXd m) : matrix(std::move(m)) {
    if (matrix.rows() != matrix.cols())
      throw invalid_input("ShiftOperator: matrix must be square");
    if (!matrix.isApprox(matrix.transpose(), 0.0))
      throw invalid_input("ShiftOperator: matrix must be symmetric");
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
      for (Eigen::Index j = i + 1; j < matrix.cols(); ++j)
        if (matrix(i, j) != 0.0) ++edge_count;
  }

  int n() const { return static_cast<int>(matrix.rows()); }

  /// Zero operator on n nodes (empty edge set; legal, e.g. before any
  /// communication has happened).
  static ShiftOperator zero(int n) {
    ShiftOperator s;
    s.matrix = Eigen::MatrixXd::Zero(n, n);
    return s;
  }
};

/// Proximity communication graph: agents i and j are linked iff
/// ||r_i - r_j|| <= radius. Returns the binary adjacency matrix.
inline ShiftOperator build_disk_graph(const Eigen::MatrixXd& positions, double radius) {
  if (positions.cols() != 2)
    throw invalid_input("build_disk_graph: positions must be N x 2");
  if (!(radius > 0.0))
    throw invalid_input("build_disk_graph: radius must be positive");
  if (!positions.allFinite())
    throw invalid_input("build_disk_graph: non-finite positions");
  const int n = static_cast<int>(positions.rows());
  ShiftOperator s;
  s.matrix = Eigen::MatrixXd::Zero(n, n);
  const double r2 = radius * radius;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = positions(i, 0) - positions(j, 0);
      const double dy = positions(i, 1) - positions(j, 1);
      if (dx * dx + dy * dy <= r2) {
        s.matrix(i, j) = 1.0;
        s.matrix(j, i) = 1.0;
        ++s.edge_count;
      }
    }
  }
  return s;
}

/// One communication round: S * X. Row i of the output depends only on the
/// rows of X held by i's neighbors (and i itself when the support has a
/// nonzero diagonal, which the adjacency choice does not).
inline GraphSignal shift(const ShiftOperator& s, const GraphSignal& x) {
  if (s.matrix.rows() != x.rows())
    throw invalid_input("shift: dimension mismatch between S and X");
  return s.matrix * x;
}

/// Adjacency lists of the support's nonzero off-diagonal pattern.
inline std::vector<std::vector<int>> neighbor_lists(const ShiftOperator& s) {
  const int n = s.n();
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && s.matrix(i, j) != 0.0) adj[i].push_back(j);
  return adj;
}

/// k-hop neighborhood of node i by breadth-first expansion;
/// the 0-hop neighborhood is {i}.
inline std::vector<int> khop_mask(const ShiftOperator& s, int i, int k) {
  const int n = s.n();
  if (i < 0 || i >= n) throw invalid_input("khop_mask: node index out of range");
  if (k < 0) throw invalid_input("khop_mask: k must be nonnegative");
  std::vector<char> in_set(n, 0);
  in_set[i] = 1;
  std::vector<int> frontier{i};
  const auto adj = neighbor_lists(s);
  for (int hop = 0; hop < k && !frontier.empty(); ++hop) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int v : adj[u]) {
        if (!in_set[v]) {
          in_set[v] = 1;
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }
  std::vector<int> out;
  for (int v = 0; v < n; ++v)
    if (in_set[v]) out.push_back(v);
  return out;
}

/// True iff the support's graph is connected (vacuously true for N <= 1).
inline bool is_connected(const ShiftOperator& s) {
  const int n = s.n();
  if (n <= 1) return true;
  return static_cast<int>(khop_mask(s, 0, n - 1).size()) == n;
}

/// A relabeling of the agents: node i is renamed perm[i]. The matrix form P
/// has P(i, perm[i]) = 1, so P^T X moves row i of X to row perm[i].
struct Permutation {
  std::vector<int> perm;

  explicit Permutation(std::vector<int> p) : perm(std::move(p)) {
    std::vector<char> seen(perm.size(), 0);
    for (int v : perm) {
      if (v < 0 || v >= static_cast<int>(perm.size()) || seen[v])
        throw invalid_input("Permutation: array is not a bijection");
      seen[v] = 1;
    }
  }

  int n() const { return static_cast<int>(perm.size()); }

  static Permutation identity(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    return Permutation(std::move(p));
  }

  Permutation inverse() const {
    std::vector<int> inv(perm.size());
    for (int i = 0; i < n(); ++i) inv[perm[i]] = i;
    return Permutation(std::move(inv));
  }

  /// Dense matrix form; mostly useful for tests.
  Eigen::MatrixXd matrix() const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n(), n());
    for (int i = 0; i < n(); ++i) p(i, perm[i]) = 1.0;
    return p;
  }
};

/// P^T X: row i of X moves to row perm[i].
inline GraphSignal permute_signal(const Permutation& p, const GraphSignal& x) {
  if (p.n() != x.rows()) throw invalid_input("permute_signal: size mismatch");
  GraphSignal out(x.rows(), x.cols());
  for (int i = 0; i < p.n(); ++i) out.row(p.perm[i]) = x.row(i);
  return out;
}

/// P^T S P: consistent relabeling of rows and columns.
inline ShiftOperator permute_shift(const Permutation& p, const ShiftOperator& s) {
  if (p.n() != s.n()) throw invalid_input("permute_shift: size mismatch");
  Eigen::MatrixXd m(s.n(), s.n());
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.n(); ++j) m(p.perm[i], p.perm[j]) = s.matrix(i, j);
  ShiftOperator out;
  out.matrix = std::move(m);
  out.edge_count = s.edge_count;
  return out;
}

/// Relabels a (signal, support) pair together.
inline std::pair<GraphSignal, ShiftOperator> permute(const Permutation& p,
                                                     const GraphSignal& x,
                                                     const ShiftOperator& s) {
  return {permute_signal(p, x), permute_shift(p, s)};
}

}  // namespace gnnctrl

#endif  // GNNCTRL_GRAPH_HPP
