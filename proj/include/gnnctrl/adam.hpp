#ifndef GNNCTRL_ADAM_HPP
#define GNNCTRL_ADAM_HPP

#include <Eigen/Dense>
#include <cmath>

#include "gnnctrl/errors.hpp"

namespace gnnctrl {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw config_error("adam: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw config_error("adam: betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw config_error("adam: eps must be positive");
  }
};

/// First/second moment accumulators; `t` counts completed steps.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;

  explicit AdamState(Eigen::Index dim)
      : m(Eigen::VectorXd::Zero(dim)), v(Eigen::VectorXd::Zero(dim)) {}
};

/// One ADAM update with the usual bias correction:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
inline void adam_step(AdamState& st, const AdamConfig& cfg, Eigen::VectorXd& theta,
                      const Eigen::VectorXd& grad) {
  if (theta.size() != st.m.size() || grad.size() != st.m.size())
    throw invalid_input("adam_step: dimension mismatch");
  ++st.t;
  st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
  st.v = cfg.beta2 * st.v.array().matrix() + (1.0 - cfg.beta2) * grad.array().square().matrix();
  const double mc = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double vc = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  theta.array() -=
      cfg.lr * (st.m.array() / mc) / ((st.v.array() / vc).sqrt() + cfg.eps);
}

}  // namespace gnnctrl

#endif  // GNNCTRL_ADAM_HPP
