#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "qnr/error.hpp"

namespace qnr::nn {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState(Eigen::Index n, double learning_rate)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)), lr(learning_rate) {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  }
};

/// One bias-corrected Adam update of `theta` in place.
inline void adam_step(AdamState& s, Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  if (grad.size() != theta.size() || s.m.size() != theta.size()) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  ++s.t;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  theta.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

}  // namespace qnr::nn
