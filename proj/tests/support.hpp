#ifndef GNNCTRL_TESTS_SUPPORT_HPP
#define GNNCTRL_TESTS_SUPPORT_HPP

// Test-side reference implementations. Each one recomputes a library
// quantity along a deliberately different path (explicit matrix powers,
// literal formula transcriptions, dense permutation matrices) so agreement
// is evidence, not tautology.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gnnctrl/arch.hpp"
#include "gnnctrl/filter.hpp"
#include "gnnctrl/graph.hpp"
#include "gnnctrl/rng.hpp"

namespace testsup {

using Eigen::MatrixXd;

/// Erdos-Renyi style random symmetric 0/1 support, zero diagonal.
inline gnnctrl::ShiftOperator random_support(int n, double edge_prob, gnnctrl::Rng& rng) {
  MatrixXd m = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < edge_prob) {
        m(i, j) = 1.0;
        m(j, i) = 1.0;
      }
  return gnnctrl::ShiftOperator(std::move(m));
}

inline MatrixXd random_signal(int n, int f, gnnctrl::Rng& rng, double scale = 1.0) {
  MatrixXd x(n, f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) x(i, j) = rng.symmetric(scale);
  return x;
}

inline gnnctrl::Permutation random_permutation(int n, gnnctrl::Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  rng.shuffle(p);
  return gnnctrl::Permutation(std::move(p));
}

/// Static filter via explicit matrix powers: y = sum_k (S^k) X H_k with S^k
/// actually materialized.
inline MatrixXd power_filter(const gnnctrl::FilterTaps& h, const MatrixXd& s,
                             const MatrixXd& x) {
  MatrixXd acc = MatrixXd::Zero(x.rows(), h.f_out());
  MatrixXd sk = MatrixXd::Identity(s.rows(), s.cols());
  for (int k = 0; k <= h.order(); ++k) {
    if (k > 0) sk = sk * s;  // S^k as an explicit power
    acc += sk * x * h.taps[static_cast<std::size_t>(k)];
  }
  return acc;
}

/// Unit-delay filter exactly as written: for each k, materialize the chain
/// S(t) S(t-1) ... S(t-k+1) as one N x N product, then apply it to x(t-k).
/// Sequences are chronological (index = time). Terms reaching before t=0
/// are zero.
inline MatrixXd delayed_filter_literal(const gnnctrl::FilterTaps& h,
                                       const std::vector<MatrixXd>& s_seq,
                                       const std::vector<MatrixXd>& x_seq, int t) {
  const auto n = x_seq[0].rows();
  MatrixXd acc = MatrixXd::Zero(n, h.f_out());
  for (int k = 0; k <= h.order(); ++k) {
    if (t - k < 0) continue;
    MatrixXd chain = MatrixXd::Identity(n, n);
    for (int j = t; j >= t - k + 1; --j) chain = chain * s_seq[static_cast<std::size_t>(j)];
    acc += chain * x_seq[static_cast<std::size_t>(t - k)] * h.taps[static_cast<std::size_t>(k)];
  }
  return acc;
}

/// Feedforward architectures over a whole sequence, transcribed from the
/// layer definitions: hidden = sigma(delayed filter), output = readout
/// filter on the current graph.
inline std::vector<MatrixXd> gcnn_forward_literal(const gnnctrl::ArchHyper& hy,
                                                  const gnnctrl::ModelParams& p,
                                                  const std::vector<MatrixXd>& s_seq,
                                                  const std::vector<MatrixXd>& x_seq) {
  std::vector<MatrixXd> out;
  for (std::size_t t = 0; t < s_seq.size(); ++t) {
    MatrixXd hidden = delayed_filter_literal(p.input, s_seq, x_seq, static_cast<int>(t));
    if (hy.hidden() == gnnctrl::Nonlinearity::tanh_fn) hidden = hidden.array().tanh().matrix();
    out.push_back(power_filter(p.readout, s_seq[t], hidden));
  }
  return out;
}

/// GRNN transcription: Z(t) = sigma(A-term + B-term), with the hidden-state
/// term running one tick behind on its own chain of (older) supports;
/// U(t) = readout filter of Z(t) on the current graph. Z(-1) and earlier
/// are zero.
inline std::vector<MatrixXd> grnn_forward_literal(const gnnctrl::ArchHyper& hy,
                                                  const gnnctrl::ModelParams& p,
                                                  const std::vector<MatrixXd>& s_seq,
                                                  const std::vector<MatrixXd>& x_seq) {
  const auto n = x_seq[0].rows();
  std::vector<MatrixXd> z_seq;  // chronological hidden states
  std::vector<MatrixXd> out;
  for (int t = 0; t < static_cast<int>(s_seq.size()); ++t) {
    MatrixXd pre = delayed_filter_literal(p.input, s_seq, x_seq, t);
    for (int k = 0; k <= hy.k; ++k) {
      const int zt = t - 1 - k;  // B_k touches Z(t-1-k)
      if (zt < 0) continue;
      MatrixXd chain = MatrixXd::Identity(n, n);
      for (int j = t - 1; j >= t - k; --j) chain = chain * s_seq[static_cast<std::size_t>(j)];
      pre += chain * z_seq[static_cast<std::size_t>(zt)] * p.recur.taps[static_cast<std::size_t>(k)];
    }
    MatrixXd z = hy.hidden() == gnnctrl::Nonlinearity::tanh_fn
                     ? pre.array().tanh().matrix().eval()
                     : pre;
    z_seq.push_back(z);
    out.push_back(power_filter(p.readout, s_seq[static_cast<std::size_t>(t)], z));
  }
  return out;
}

/// Random chronological (support, signal) sequence on a fixed node count.
struct SequenceFixture {
  std::vector<MatrixXd> s_seq;
  std::vector<gnnctrl::ShiftOperator> supports;
  std::vector<MatrixXd> x_seq;
};

inline SequenceFixture random_sequence(int n, int f, int steps, gnnctrl::Rng& rng,
                                       double edge_prob = 0.4) {
  SequenceFixture fx;
  for (int t = 0; t < steps; ++t) {
    auto s = random_support(n, edge_prob, rng);
    fx.s_seq.push_back(s.matrix);
    fx.supports.push_back(std::move(s));
    fx.x_seq.push_back(random_signal(n, f, rng));
  }
  return fx;
}

}  // namespace testsup

#endif  // GNNCTRL_TESTS_SUPPORT_HPP
