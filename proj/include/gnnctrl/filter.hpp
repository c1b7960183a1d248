#ifndef GNNCTRL_FILTER_HPP
#define GNNCTRL_FILTER_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <deque>
#include <utility>
#include <vector>

#include "gnnctrl/errors.hpp"
#include "gnnctrl/graph.hpp"

namespace gnnctrl {

/// Tap matrices of a graph convolutional filter. taps[k] is the F_in x F_out
/// coefficient applied to the k-times-shifted signal; the filter order is
/// taps.size() - 1.
struct FilterTaps {
  std::vector<Eigen::MatrixXd> taps;

  FilterTaps() = default;
  explicit FilterTaps(std::vector<Eigen::MatrixXd> t) : taps(std::move(t)) {
    validate();
  }

  void validate() const {
    if (taps.empty()) throw invalid_input("FilterTaps: need at least the k=0 tap");
    for (const auto& h : taps)
      if (h.rows() != taps[0].rows() || h.cols() != taps[0].cols())
        throw invalid_input("FilterTaps: all taps must share one shape");
  }

  int order() const { return static_cast<int>(taps.size()) - 1; }
  int f_in() const { return static_cast<int>(taps[0].rows()); }
  int f_out() const { return static_cast<int>(taps[0].cols()); }

  static FilterTaps zeros(int order, int f_in, int f_out) {
    std::vector<Eigen::MatrixXd> t(static_cast<std::size_t>(order) + 1,
                                   Eigen::MatrixXd::Zero(f_in, f_out));
    return FilterTaps(std::move(t));
  }
};

/// Static graph convolution sum_{k=0..K} S^k X H_k, evaluated by iterated
/// shifts: the running signal is multiplied by S once per tap, never by a
/// precomputed matrix power.
inline GraphSignal apply_filter(const FilterTaps& h, const ShiftOperator& s,
                                const GraphSignal& x) {
  if (x.cols() != h.f_in())
    throw invalid_input("apply_filter: signal feature count != tap rows");
  if (s.matrix.rows() != x.rows())
    throw invalid_input("apply_filter: S and X disagree on node count");
  GraphSignal acc = x * h.taps[0];
  GraphSignal shifted = x;
  for (int k = 1; k <= h.order(); ++k) {
    shifted = s.matrix * shifted;
    acc.noalias() += shifted * h.taps[static_cast<std::size_t>(k)];
  }
  return acc;
}

/// Rolling record of (support, signal) pairs for delayed filtering, newest
/// first: at(0) is time t, at(1) is time t-1, ... Push the current pair
/// before evaluating a delayed filter at time t. Entries older than the
/// capacity are dropped; times before the recording started behave as zero
/// signals (terms that would need them are skipped).
class GraphHistory {
 public:
  explicit GraphHistory(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw invalid_input("GraphHistory: capacity must be >= 1");
  }

  void push(ShiftOperator s, GraphSignal x) {
    if (s.matrix.rows() != x.rows())
      throw invalid_input("GraphHistory: S and X disagree on node count");
    entries_.emplace_front(std::move(s), std::move(x));
    if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_back();
  }

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  /// age = 0 is the most recent push.
  const ShiftOperator& support(int age) const { return entries_.at(static_cast<std::size_t>(age)).first; }
  const GraphSignal& signal(int age) const { return entries_.at(static_cast<std::size_t>(age)).second; }

 private:
  int capacity_;
  std::deque<std::pair<ShiftOperator, GraphSignal>> entries_;
};

/// Unit-delay graph convolution over a time-varying graph:
///
///   y(t) = sum_{k=0..K} S(t) S(t-1) ... S(t-k+1) x(t-k) H_k
///
/// The k = 0 term is x(t) H_0, unshifted. The k-th term touches only data
/// a node can have received through k communication rounds, one hop per
/// sampling interval, so the computation is implementable on the network
/// with local exchanges only. Products associate newest-support-first:
/// S(t) * (S(t-1) * (... * x(t-k))). Terms whose delayed signal predates
/// the history are zero and are skipped.
///
/// `hist` must already contain the pair for time t at age 0.
inline GraphSignal apply_delayed_filter(const FilterTaps& h, const GraphHistory& hist) {
  if (hist.empty())
    throw invalid_input("apply_delayed_filter: history is empty");
  if (hist.signal(0).cols() != h.f_in())
    throw invalid_input("apply_delayed_filter: signal feature count != tap rows");
  const int n = static_cast<int>(hist.signal(0).rows());
  GraphSignal acc = hist.signal(0) * h.taps[0];
  const int kmax = std::min(h.order(), hist.size() - 1);
  for (int k = 1; k <= kmax; ++k) {
    if (static_cast<int>(hist.signal(k).rows()) != n)
      throw invalid_input("apply_delayed_filter: node count changed within history");
    GraphSignal z = hist.signal(k);
    for (int age = k - 1; age >= 0; --age) z = hist.support(age).matrix * z;
    acc.noalias() += z * h.taps[static_cast<std::size_t>(k)];
  }
  return acc;
}

}  // namespace gnnctrl

#endif  // GNNCTRL_FILTER_HPP
