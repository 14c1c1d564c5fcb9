#pragma once

// Randomized property checks shared by the unit tests and the acceptance
// runner. Each returns the worst deviation seen and the tolerance it is held to.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qnr/qnr.hpp"

namespace qnr::props {

struct Check {
  std::string name;
  double worst = 0.0;
  double tolerance = 0.0;
  bool pass() const { return worst < tolerance; }
};

/// A valid state of either kind, with its purity spread by mixing with I/d.
inline DensityMatrix random_state(int n, Rng& rng) {
  const DensityMatrix base = rng.uniform() < 0.5 ? haar_pure(n, rng) : ginibre_mixed(n, rng);
  const double lambda = rng.uniform();
  const int d = hilbert_dim(n);
  return DensityMatrix(n, lambda * base.matrix() + (1.0 - lambda) * ComplexMatrix::Identity(d, d) / d);
}

inline std::vector<KrausChannel> catalog() {
  return {identity_channel(),
          bit_flip(0.2),
          phase_flip(0.2),
          bit_phase_flip(0.2),
          bit_flip(1.0),
          pauli_channel(0.7, 0.1, 0.1, 0.1),
          pauli_channel(0.25, 0.25, 0.25, 0.25),
          depolarizing(0.3),
          depolarizing(1.0),
          generalized_amplitude_damping(0.5, 0.3),
          generalized_amplitude_damping(0.1, 0.9),
          correlated_ad(0.1, 0.2),
          correlated_ad(0.7, 0.5),
          tensor(phase_flip(0.2), identity_channel()),
          tensor(phase_flip(0.2), phase_flip(0.2)),
          tensor(phase_flip(0.2), bit_flip(0.2)),
          tensor(bit_flip(0.2), tensor(phase_flip(0.2), bit_phase_flip(0.2))),
          tensor(generalized_amplitude_damping(0.5, 0.3), correlated_ad(0.1, 0.2)),
          tensor(depolarizing(0.3), tensor(pauli_channel(0.7, 0.1, 0.1, 0.1), depolarizing(0.1)))};
}

inline Check cptp_catalog() {
  Check c{"CPTP residual, catalog and tensor products", 0.0, 1e-10};
  for (const auto& ch : catalog()) c.worst = std::max(c.worst, validate_cptp(ch).residual);
  return c;
}

inline Check bloch_round_trip(std::uint64_t seed = 11) {
  Check c{"Bloch round trip, 1000 states per n", 0.0, 1e-10};
  Rng rng(seed);
  for (int n = 1; n <= 3; ++n) {
    for (int i = 0; i < 1000; ++i) {
      const BlochVector r = bloch_from_density(random_state(n, rng));
      const BlochVector back = bloch_from_density(density_from_bloch(r));
      c.worst = std::max(c.worst, (back.r() - r.r()).cwiseAbs().maxCoeff());
    }
  }
  return c;
}

inline Check closed_form_vs_uhlmann(std::uint64_t seed = 12) {
  Check c{"single-qubit Bloch fidelity vs Uhlmann fidelity, 1000 pairs", 0.0, 1e-7};
  Rng rng(seed);
  for (int i = 0; i < 1000; ++i) {
    const DensityMatrix a = random_state(1, rng);
    const DensityMatrix b = random_state(1, rng);
    const double closed = fidelity_bloch_1q(bloch_from_density(a), bloch_from_density(b));
    c.worst = std::max(c.worst, std::abs(closed - fidelity_general(a, b)));
  }
  return c;
}

inline Check mse_infidelity_identity(std::uint64_t seed = 13) {
  Check c{"|s-r|^2 = 4(1-F) on 1000 pure pairs", 0.0, 1e-9};
  Rng rng(seed);
  for (int i = 0; i < 1000; ++i) {
    const BlochVector r = bloch_from_density(haar_pure(1, rng));
    const BlochVector s = bloch_from_density(haar_pure(1, rng));
    const double lhs = (s.r() - r.r()).squaredNorm();
    c.worst = std::max(c.worst, std::abs(lhs - 4.0 * (1.0 - fidelity_bloch_1q(r, s))));
  }
  return c;
}

inline Check trace_sqrt_identity(std::uint64_t seed = 14) {
  Check c{"(Tr sqrt M)^2 = Tr M + 2 sqrt(det M) on 500 PSD 2x2", 0.0, 1e-8};
  Rng rng(seed);
  for (int i = 0; i < 500; ++i) {
    ComplexMatrix b(2, 2);
    for (Eigen::Index k = 0; k < 4; ++k) b(k % 2, k / 2) = rng.complex_normal();
    if (i % 5 == 0) b.col(1) = b.col(0) * rng.complex_normal() + 1e-3 * b.col(1);  // nearly singular
    ComplexMatrix m = b * b.adjoint();
    m = 0.5 * (m + m.adjoint()).eval();
    m /= m.trace().real();
    const double tr_sqrt = hermitian_sqrt(m).trace().real();
    const double det = std::max(0.0, m.determinant().real());
    c.worst = std::max(c.worst, std::abs(tr_sqrt * tr_sqrt - m.trace().real() - 2.0 * std::sqrt(det)));
  }
  return c;
}

inline Check gad_stationary() {
  Check c{"GAD stationary state diag(p,1-p) is fixed", 0.0, 1e-10};
  for (const double p : {0.0, 0.1, 0.3, 0.5, 0.8, 1.0}) {
    for (const double g : {0.0, 0.2, 0.3, 0.7, 1.0}) {
      ComplexMatrix m = ComplexMatrix::Zero(2, 2);
      m(0, 0) = p;
      m(1, 1) = 1.0 - p;
      const DensityMatrix rho(1, m);
      const DensityMatrix out = apply(generalized_amplitude_damping(p, g), rho);
      c.worst = std::max(c.worst, (out.matrix() - m).cwiseAbs().maxCoeff());
    }
  }
  return c;
}

struct Affine {
  Eigen::Matrix3d A;
  Eigen::Vector3d c;
};

/// Linear part and offset of a single-qubit channel on Bloch vectors, read
/// off the images of the six axis states.
inline Affine fit_affine(const KrausChannel& ch) {
  Affine f{Eigen::Matrix3d::Zero(), Eigen::Vector3d::Zero()};
  for (int k = 0; k < 3; ++k) {
    RealVector e = RealVector::Zero(3);
    e[k] = 1.0;
    const RealVector plus = apply(ch, BlochVector(1, e)).r();
    const RealVector minus = apply(ch, BlochVector(1, -e)).r();
    f.A.col(k) = 0.5 * (plus - minus);
    f.c += 0.5 * (plus + minus) / 3.0;
  }
  return f;
}

inline Check affine_oracle() {
  Check c{"affine action fitted from axis states vs analytic maps", 0.0, 1e-10};
  auto compare = [&](const KrausChannel& ch, const Eigen::Vector3d& diag, const Eigen::Vector3d& offset) {
    const Affine f = fit_affine(ch);
    c.worst = std::max(c.worst, (f.A - Eigen::Matrix3d(diag.asDiagonal())).cwiseAbs().maxCoeff());
    c.worst = std::max(c.worst, (f.c - offset).cwiseAbs().maxCoeff());
    // the fit must also predict interior points
    Rng rng(99);
    for (int i = 0; i < 20; ++i) {
      const RealVector r = bloch_from_density(random_state(1, rng)).r();
      const Eigen::Vector3d want = f.A * Eigen::Vector3d(r) + f.c;
      c.worst = std::max(c.worst, (apply(ch, BlochVector(1, r)).r() - RealVector(want)).cwiseAbs().maxCoeff());
    }
  };
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  for (const double p : {0.0, 0.2, 0.5, 0.9}) {
    const double q = 1.0 - 2.0 * p;
    compare(phase_flip(p), {q, q, 1.0}, zero);
    compare(bit_flip(p), {1.0, q, q}, zero);
    compare(bit_phase_flip(p), {q, 1.0, q}, zero);
    compare(depolarizing(p), Eigen::Vector3d::Constant(1.0 - p), zero);
  }
  compare(pauli_channel(0.7, 0.1, 0.1, 0.1), {0.6, 0.6, 0.6}, zero);
  compare(pauli_channel(0.4, 0.3, 0.2, 0.1), {0.4 + 0.3 - 0.2 - 0.1, 0.4 - 0.3 + 0.2 - 0.1, 0.4 - 0.3 - 0.2 + 0.1},
          zero);
  for (const double p : {0.0, 0.5, 0.8}) {
    for (const double g : {0.0, 0.3, 1.0}) {
      const double s = std::sqrt(1.0 - g);
      compare(generalized_amplitude_damping(p, g), {s, s, 1.0 - g}, {0.0, 0.0, g * (2.0 * p - 1.0)});
    }
  }
  return c;
}

inline Check ellipsoid(std::uint64_t seed = 15) {
  Check c{"Z(0.2) image lies on (x/0.6)^2+(y/0.6)^2+z^2=1, 10^4 points", 0.0, 1e-9};
  for (const auto& pt : exp::bloch_cloud("Z(0.2)", 10000, seed)) {
    const auto& v = pt.noisy;
    const double lhs = (v[0] / 0.6) * (v[0] / 0.6) + (v[1] / 0.6) * (v[1] / 0.6) + v[2] * v[2];
    c.worst = std::max(c.worst, std::abs(lhs - 1.0));
  }
  return c;
}

// ---- gradients

struct GradientCase {
  std::string name;
  nn::HeadSpec head;
  nn::LossKind loss;
  bool mixed_targets;
};

inline std::vector<GradientCase> gradient_cases() {
  using nn::HeadSpec;
  using nn::LossKind;
  std::vector<GradientCase> cases;
  const std::vector<std::pair<std::string, HeadSpec>> heads = {
      {"linear", HeadSpec::linear()},
      {"unit_norm", HeadSpec::pure_state(1)},
      {"purity_rescale/exact_norm", HeadSpec::purity_rescale(1, 1.0, nn::PurityMode::exact_norm)},
      {"purity_rescale/sqrt_purity", HeadSpec::purity_rescale(1, 1.0, nn::PurityMode::sqrt_purity)}};
  for (const auto& [hname, head] : heads) {
    const bool mixed = head.kind == nn::HeadKind::purity_rescale;
    cases.push_back({"mse x " + hname, head, LossKind::mse, mixed});
    cases.push_back({"infidelity_pure x " + hname, head, LossKind::infidelity_pure, mixed});
    cases.push_back({"infidelity_mixed x " + hname, head, LossKind::infidelity_mixed, mixed});
  }
  cases.push_back({"cce x softmax", HeadSpec::softmax(), LossKind::cce, false});
  return cases;
}

/// Random batch for a [3, h, h, out] model.
inline nn::Batch gradient_batch(const GradientCase& gc, int batch, int classes, Rng& rng) {
  nn::Batch b;
  b.inputs.resize(3, batch);
  if (gc.loss != nn::LossKind::cce) b.targets.resize(3, batch);
  for (int j = 0; j < batch; ++j) {
    const DensityMatrix clean = gc.mixed_targets ? random_state(1, rng) : haar_pure(1, rng);
    const RealVector r = bloch_from_density(clean).r();
    b.inputs.col(j) = bloch_from_density(apply(depolarizing(0.3), clean)).r();
    if (gc.loss == nn::LossKind::cce) {
      b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
    } else {
      b.targets.col(j) = r;
      b.purities.push_back((1.0 + r.squaredNorm()) / 2.0);
    }
  }
  return b;
}

/// ||analytic - central difference|| / ||central difference||.
inline double gradient_error(const nn::MlpModel& model, const nn::Batch& batch, nn::LossKind loss,
                             double step = 1e-6) {
  const auto lg = nn::backward(model, batch, loss);
  nn::MlpModel probe = model;
  nn::Vector fd(model.parameter_count());
  for (Eigen::Index i = 0; i < fd.size(); ++i) {
    const double keep = probe.parameters()[i];
    probe.parameters()[i] = keep + step;
    const double up = nn::objective(probe, batch, loss);
    probe.parameters()[i] = keep - step;
    const double down = nn::objective(probe, batch, loss);
    probe.parameters()[i] = keep;
    fd[i] = (up - down) / (2.0 * step);
  }
  return (lg.gradient - fd).norm() / std::max(fd.norm(), 1e-12);
}

/// Worst relative gradient error for one case over `models` random [3,8,8,p]
/// models with random biases (so that ReLU units are mixed on and off).
inline double gradient_case_error(const GradientCase& gc, int models, std::uint64_t seed) {
  double worst = 0.0;
  const int classes = 3;
  for (int m = 0; m < models; ++m) {
    Rng rng = Rng(seed).substream(static_cast<std::uint64_t>(m));
    const int out = gc.loss == nn::LossKind::cce ? classes : 3;
    nn::MlpModel model = nn::init_model({3, 8, 8, out}, gc.head, rng);
    for (std::size_t k = 0; k < model.num_layers(); ++k) {
      for (Eigen::Index i = 0; i < model.bias(k).size(); ++i) model.bias(k)[i] = rng.uniform(-0.3, 0.3);
    }
    const nn::Batch batch = gradient_batch(gc, 6, classes, rng);
    worst = std::max(worst, gradient_error(model, batch, gc.loss));
  }
  return worst;
}

inline Check gradients(int models = 20, std::uint64_t seed = 16) {
  Check c{"gradient vs central differences, every loss x head", 0.0, 1e-5};
  for (const auto& gc : gradient_cases()) c.worst = std::max(c.worst, gradient_case_error(gc, models, seed));
  return c;
}

inline std::vector<Check> all_checks() {
  return {cptp_catalog(),          bloch_round_trip(), closed_form_vs_uhlmann(), mse_infidelity_identity(),
          trace_sqrt_identity(),   gradients(),        gad_stationary(),         affine_oracle(),
          ellipsoid()};
}

}  // namespace qnr::props
