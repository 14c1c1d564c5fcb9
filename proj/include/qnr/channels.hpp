#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qnr/qstate.hpp"

namespace qnr {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

struct ChannelParam {
  std::string name;
  double value;
};

/// A quantum channel in Kraus form, rho -> sum_i E_i rho E_i^dagger.
///
/// Construction only checks operator shapes so that non-CPTP lists can be
/// represented and rejected by `validate_cptp`. Every catalog constructor
/// below produces a trace-preserving list. The label is a channel-spec
/// string that `parse_channel_spec` maps back to the same channel.
class KrausChannel {
 public:
  KrausChannel(int qubits, std::vector<ComplexMatrix> kraus, std::string label,
               std::vector<ChannelParam> params = {})
      : qubits_(qubits), kraus_(std::move(kraus)), label_(std::move(label)), params_(std::move(params)) {
    require_supported_qubits(qubits_);
    if (kraus_.empty()) throw InvalidArgument("channel needs at least one Kraus operator");
    const int d = hilbert_dim(qubits_);
    for (const auto& e : kraus_) {
      if (e.rows() != d || e.cols() != d) {
        throw InvalidArgument("Kraus operators must all be " + std::to_string(d) + "x" +
                              std::to_string(d));
      }
    }
  }

  int qubits() const noexcept { return qubits_; }
  int dim() const noexcept { return hilbert_dim(qubits_); }
  const std::vector<ComplexMatrix>& kraus() const noexcept { return kraus_; }
  const std::string& label() const noexcept { return label_; }
  const std::vector<ChannelParam>& params() const noexcept { return params_; }

 private:
  int qubits_;
  std::vector<ComplexMatrix> kraus_;
  std::string label_;
  std::vector<ChannelParam> params_;
};

namespace detail {

inline void require_probability(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InvalidArgument(std::string("parameter ") + name + " out of range [0,1]: " +
                          format_number(v));
  }
}

inline KrausChannel single_pauli_flip(const char* symbol, int which, double p) {
  require_probability("p", p);
  return KrausChannel(1, {std::sqrt(1.0 - p) * pauli::I(), std::sqrt(p) * pauli::single()[which]},
                      std::string(symbol) + "(" + format_number(p) + ")", {{"p", p}});
}

}  // namespace detail

/// Single-qubit identity channel, spec text "I".
inline KrausChannel identity_channel() { return KrausChannel(1, {pauli::I()}, "I"); }

/// {sqrt(1-p) I, sqrt(p) X}
inline KrausChannel bit_flip(double p) { return detail::single_pauli_flip("X", 1, p); }

/// {sqrt(1-p) I, sqrt(p) Z}
inline KrausChannel phase_flip(double p) { return detail::single_pauli_flip("Z", 3, p); }

/// {sqrt(1-p) I, sqrt(p) Y}
inline KrausChannel bit_phase_flip(double p) { return detail::single_pauli_flip("Y", 2, p); }

/// {sqrt(p0) I, sqrt(p1) X, sqrt(p2) Y, sqrt(p3) Z}; the probabilities must sum to 1.
inline KrausChannel pauli_channel(double p0, double p1, double p2, double p3) {
  detail::require_probability("p0", p0);
  detail::require_probability("p1", p1);
  detail::require_probability("p2", p2);
  detail::require_probability("p3", p3);
  if (std::abs(p0 + p1 + p2 + p3 - 1.0) > 1e-12) {
    throw InvalidArgument("Pauli channel probabilities must sum to 1");
  }
  return KrausChannel(1,
                      {std::sqrt(p0) * pauli::I(), std::sqrt(p1) * pauli::X(),
                       std::sqrt(p2) * pauli::Y(), std::sqrt(p3) * pauli::Z()},
                      "PAULI(" + format_number(p0) + "," + format_number(p1) + "," +
                          format_number(p2) + "," + format_number(p3) + ")",
                      {{"p0", p0}, {"p1", p1}, {"p2", p2}, {"p3", p3}});
}

/// Single-qubit depolarizing channel, rho -> (1-p) rho + p I/2.
inline KrausChannel depolarizing(double p) {
  detail::require_probability("p", p);
  const double off = std::sqrt(p) / 2.0;
  return KrausChannel(1,
                      {std::sqrt(1.0 - 0.75 * p) * pauli::I(), off * pauli::X(), off * pauli::Y(),
                       off * pauli::Z()},
                      "DEP(" + format_number(p) + ")", {{"p", p}});
}

/// Depolarizing map on d = 2^n dimensions in affine form.
struct DepolarizingMap {
  double p;
  int qubits;

  DensityMatrix apply(const DensityMatrix& rho) const {
    if (rho.qubits() != qubits) throw InvalidArgument("channel/state dimension mismatch");
    const int d = hilbert_dim(qubits);
    return DensityMatrix(qubits, (1.0 - p) * rho.matrix() +
                                     (p / d) * ComplexMatrix::Identity(d, d));
  }
};

inline DepolarizingMap depolarizing_d(double p, int qubits) {
  detail::require_probability("p", p);
  require_supported_qubits(qubits);
  return {p, qubits};
}

/// Generalized amplitude damping with damping rate gamma and stationary
/// state diag(p, 1-p).
inline KrausChannel generalized_amplitude_damping(double p, double gamma) {
  detail::require_probability("p", p);
  detail::require_probability("gamma", gamma);
  const double a = std::sqrt(p);
  const double b = std::sqrt(1.0 - p);
  const double keep = std::sqrt(1.0 - gamma);
  const double jump = std::sqrt(gamma);
  ComplexMatrix e0 = ComplexMatrix::Zero(2, 2), e1 = e0, e2 = e0, e3 = e0;
  e0(0, 0) = a;
  e0(1, 1) = a * keep;
  e1(0, 1) = a * jump;
  e2(0, 0) = b * keep;
  e2(1, 1) = b;
  e3(1, 0) = b * jump;
  return KrausChannel(1, {e0, e1, e2, e3},
                      "GAD(" + format_number(p) + "," + format_number(gamma) + ")",
                      {{"p", p}, {"gamma", gamma}});
}

/// Two-qubit correlated amplitude damping: (1-mu) N0 + mu N1, folded into a
/// single Kraus list {sqrt(1-mu) A_j} followed by {sqrt(mu) B_j}. Basis order
/// is |00>, |01>, |10>, |11>.
inline KrausChannel correlated_ad(double eta, double mu) {
  detail::require_probability("eta", eta);
  detail::require_probability("mu", mu);
  ComplexMatrix e0 = ComplexMatrix::Zero(2, 2), e1 = e0;
  e0(0, 0) = 1.0;
  e0(1, 1) = std::sqrt(1.0 - eta);
  e1(0, 1) = std::sqrt(eta);

  ComplexMatrix b0 = ComplexMatrix::Identity(4, 4);
  b0(3, 3) = std::sqrt(eta);
  ComplexMatrix b1 = ComplexMatrix::Zero(4, 4);
  b1(0, 3) = std::sqrt(1.0 - eta);

  const double wa = std::sqrt(1.0 - mu);
  const double wb = std::sqrt(mu);
  std::vector<ComplexMatrix> ops = {wa * kron(e0, e0), wa * kron(e0, e1), wa * kron(e1, e0),
                                    wa * kron(e1, e1), wb * b0, wb * b1};
  return KrausChannel(2, std::move(ops),
                      "CAD(" + format_number(eta) + "," + format_number(mu) + ")",
                      {{"eta", eta}, {"mu", mu}});
}

/// Channel acting as `a` on the leading qubits and `b` on the trailing ones.
inline KrausChannel tensor(const KrausChannel& a, const KrausChannel& b) {
  if (a.qubits() + b.qubits() > kMaxQubits) {
    throw InvalidArgument("unsupported qubit count: " + std::to_string(a.qubits() + b.qubits()));
  }
  std::vector<ComplexMatrix> ops;
  ops.reserve(a.kraus().size() * b.kraus().size());
  for (const auto& ea : a.kraus()) {
    for (const auto& eb : b.kraus()) ops.push_back(kron(ea, eb));
  }
  std::vector<ChannelParam> params = a.params();
  params.insert(params.end(), b.params().begin(), b.params().end());
  return KrausChannel(a.qubits() + b.qubits(), std::move(ops), a.label() + "*" + b.label(),
                      std::move(params));
}

/// sum_i E_i rho E_i^dagger
inline DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho) {
  if (ch.qubits() != rho.qubits()) throw InvalidArgument("channel/state dimension mismatch");
  ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
  for (const auto& e : ch.kraus()) out.noalias() += e * rho.matrix() * e.adjoint();
  return DensityMatrix(rho.qubits(), std::move(out));
}

inline BlochVector apply(const KrausChannel& ch, const BlochVector& r) {
  return bloch_from_density(apply(ch, density_from_bloch(r)));
}

struct CptpReport {
  double residual;  // Frobenius norm of sum E^dagger E - I
  bool pass;
};

inline CptpReport validate_cptp(const KrausChannel& ch) {
  ComplexMatrix sum = ComplexMatrix::Zero(ch.dim(), ch.dim());
  for (const auto& e : ch.kraus()) sum.noalias() += e.adjoint() * e;
  const double residual = (sum - ComplexMatrix::Identity(ch.dim(), ch.dim())).norm();
  return {residual, residual < tol::kStructural};
}

}  // namespace qnr
