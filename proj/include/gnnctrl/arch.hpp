#ifndef GNNCTRL_ARCH_HPP
#define GNNCTRL_ARCH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gnnctrl/errors.hpp"
#include "gnnctrl/filter.hpp"
#include "gnnctrl/graph.hpp"
#include "gnnctrl/rng.hpp"

namespace gnnctrl {

enum class ArchKind { gf, gcnn, grnn };

inline std::string arch_name(ArchKind k) {
  switch (k) {
    case ArchKind::gf: return "gf";
    case ArchKind::gcnn: return "gcnn";
    case ArchKind::grnn: return "grnn";
  }
  return "?";
}

inline ArchKind arch_from_name(const std::string& s) {
  if (s == "gf") return ArchKind::gf;
  if (s == "gcnn") return ArchKind::gcnn;
  if (s == "grnn") return ArchKind::grnn;
  throw config_error("unknown architecture '" + s + "' (expected gf|gcnn|grnn)");
}

enum class Nonlinearity { identity, tanh_fn };

inline GraphSignal apply_nonlinearity(Nonlinearity nl, const GraphSignal& x) {
  switch (nl) {
    case Nonlinearity::identity: return x;
    case Nonlinearity::tanh_fn: return x.array().tanh().matrix();
  }
  return x;
}

/// Shape of one of the three architectures. All are a filtering stage of
/// order `k` into `g` hidden features, followed by a pointwise readout
/// (a filter of order `k_out`, 0 by default, so no extra communication)
/// down to `f_out` features. The hidden nonlinearity is tanh except for
/// the plain graph filter, which is linear end to end.
struct ArchHyper {
  ArchKind kind = ArchKind::gcnn;
  int f_in = 6;
  int g = 32;
  int f_out = 2;
  int k = 3;
  int k_out = 0;

  Nonlinearity hidden() const {
    return kind == ArchKind::gf ? Nonlinearity::identity : Nonlinearity::tanh_fn;
  }
  Nonlinearity readout() const { return Nonlinearity::identity; }

  void validate() const {
    if (f_in < 1 || g < 1 || f_out < 1)
      throw config_error("ArchHyper: feature counts must be >= 1");
    if (k < 0 || k_out < 0) throw config_error("ArchHyper: filter orders must be >= 0");
  }
};

/// Trainable tensors. GF/GCNN use `input` (F_in x G, K+1 taps) and
/// `readout` (G x F_out, K_out+1 taps); the GRNN additionally has the
/// hidden-state bank `recur` (G x G, K+1 taps). `recur.taps` is empty for
/// the feedforward kinds.
struct ModelParams {
  FilterTaps input;
  FilterTaps recur;
  FilterTaps readout;
};

inline long param_count(const ArchHyper& h) {
  long n = static_cast<long>(h.f_in) * h.g * (h.k + 1) +
           static_cast<long>(h.g) * h.f_out * (h.k_out + 1);
  if (h.kind == ArchKind::grnn) n += static_cast<long>(h.g) * h.g * (h.k + 1);
  return n;
}

namespace detail {

inline void fill_bank(FilterTaps& bank, Rng& rng) {
  // Scale chosen so the summed K+1 taps keep unit-order activations:
  // i.i.d. uniform on +-1/sqrt(fan_in * (K+1)).
  const double bound =
      1.0 / std::sqrt(static_cast<double>(bank.f_in()) * static_cast<double>(bank.taps.size()));
  for (auto& t : bank.taps)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = rng.symmetric(bound);
}

}  // namespace detail

/// Deterministic initialization: a given (hyper, seed) always yields the
/// same tensors, drawn in flatten order (input bank, then recur for the
/// GRNN, then readout; taps in k order; entries row-major).
inline ModelParams init_params(const ArchHyper& h, std::uint64_t seed) {
  h.validate();
  ModelParams p;
  p.input = FilterTaps::zeros(h.k, h.f_in, h.g);
  if (h.kind == ArchKind::grnn) p.recur = FilterTaps::zeros(h.k, h.g, h.g);
  p.readout = FilterTaps::zeros(h.k_out, h.g, h.f_out);
  Rng rng(mix_seed(seed, 0x706172616d73ULL));  // "params"
  detail::fill_bank(p.input, rng);
  if (h.kind == ArchKind::grnn) detail::fill_bank(p.recur, rng);
  detail::fill_bank(p.readout, rng);
  return p;
}

namespace detail {

inline void flatten_bank(const FilterTaps& bank, Eigen::VectorXd& v, long& at) {
  for (const auto& t : bank.taps)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) v[at++] = t(r, c);
}

inline void unflatten_bank(FilterTaps& bank, const Eigen::VectorXd& v, long& at) {
  for (auto& t : bank.taps)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = v[at++];
}

}  // namespace detail

inline Eigen::VectorXd flatten(const ArchHyper& h, const ModelParams& p) {
  Eigen::VectorXd v(param_count(h));
  long at = 0;
  detail::flatten_bank(p.input, v, at);
  if (h.kind == ArchKind::grnn) detail::flatten_bank(p.recur, v, at);
  detail::flatten_bank(p.readout, v, at);
  if (at != v.size()) throw numeric_error("flatten: parameter count mismatch");
  return v;
}

inline ModelParams unflatten(const ArchHyper& h, const Eigen::VectorXd& v) {
  if (v.size() != param_count(h))
    throw invalid_input("unflatten: vector length != param_count");
  ModelParams p;
  p.input = FilterTaps::zeros(h.k, h.f_in, h.g);
  if (h.kind == ArchKind::grnn) p.recur = FilterTaps::zeros(h.k, h.g, h.g);
  p.readout = FilterTaps::zeros(h.k_out, h.g, h.f_out);
  long at = 0;
  detail::unflatten_bank(p.input, v, at);
  if (h.kind == ArchKind::grnn) detail::unflatten_bank(p.recur, v, at);
  detail::unflatten_bank(p.readout, v, at);
  return p;
}

/// Stateful evaluator for closed-loop operation. Feed one (support, signal)
/// pair per sampling instant; `act` returns the control for that instant.
/// Internally keeps the delayed input window and, for the GRNN, the hidden
/// state trail. Call `reset` between trajectories.
class LearnedPolicy {
 public:
  LearnedPolicy(ArchHyper hyper, ModelParams params)
      : hyper_(hyper), params_(std::move(params)), xhist_(hyper.k + 1), zhist_(hyper.k + 1) {
    hyper_.validate();
  }

  const ArchHyper& hyper() const { return hyper_; }
  const ModelParams& params() const { return params_; }

  void reset() {
    xhist_.clear();
    zhist_.clear();
  }

  GraphSignal act(const ShiftOperator& s, const GraphSignal& x) {
    if (x.cols() != hyper_.f_in)
      throw invalid_input("LearnedPolicy::act: feature width mismatch");
    xhist_.push(s, x);
    GraphSignal hidden_in = apply_delayed_filter(params_.input, xhist_);
    if (hyper_.kind == ArchKind::grnn) {
      if (!zhist_.empty()) hidden_in.noalias() += apply_delayed_filter(params_.recur, zhist_).eval();
      GraphSignal z = apply_nonlinearity(hyper_.hidden(), hidden_in);
      zhist_.push(s, z);
      return apply_nonlinearity(hyper_.readout(), apply_filter(params_.readout, s, z));
    }
    GraphSignal z = apply_nonlinearity(hyper_.hidden(), hidden_in);
    return apply_nonlinearity(hyper_.readout(), apply_filter(params_.readout, s, z));
  }

 private:
  ArchHyper hyper_;
  ModelParams params_;
  GraphHistory xhist_;
  GraphHistory zhist_;  // (S(tau), Z(tau)) pairs, newest = t-1 when act runs at t
};

}  // namespace gnnctrl

#endif  // GNNCTRL_ARCH_HPP
