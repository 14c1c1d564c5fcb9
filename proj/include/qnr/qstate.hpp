#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qnr/error.hpp"

namespace qnr {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double kStructural = 1e-10;  // Hermiticity, trace, positivity
inline constexpr double kBlochNorm = 1e-8;    // slack on the pure-state norm bound
inline constexpr double kPurePurity = 1e-6;   // "is this state pure"
inline constexpr double kSqrtInput = 1e-9;    // Hermiticity required by hermitian_sqrt
}  // namespace tol

inline constexpr int kMaxQubits = 3;

inline void require_supported_qubits(int n) {
  if (n < 1 || n > kMaxQubits) {
    throw InvalidArgument("unsupported qubit count: " + std::to_string(n));
  }
}

/// 2^n
inline constexpr int hilbert_dim(int n) { return 1 << n; }

/// 4^n - 1, the length of an n-qubit Bloch vector.
inline constexpr int bloch_dim(int n) { return (1 << (2 * n)) - 1; }

/// Largest squared Bloch norm allowed for n qubits (attained by pure states).
inline constexpr double max_bloch_norm2(int n) { return hilbert_dim(n) - 1.0; }

/// Qubit count from a Bloch-vector length, or 0 if the length is not 4^n - 1.
inline int qubits_from_bloch_dim(Eigen::Index len) {
  for (int n = 1; n <= kMaxQubits; ++n) {
    if (bloch_dim(n) == len) return n;
  }
  return 0;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Largest absolute elementwise deviation of `m` from its adjoint.
inline double hermiticity_error(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

namespace pauli {

/// Single-qubit Pauli matrices indexed I=0, X=1, Y=2, Z=3.
inline const std::array<ComplexMatrix, 4>& single() {
  static const std::array<ComplexMatrix, 4> mats = [] {
    using namespace std::complex_literals;
    std::array<ComplexMatrix, 4> m;
    m[0] = ComplexMatrix::Identity(2, 2);
    m[1].resize(2, 2);
    m[1] << 0.0, 1.0, 1.0, 0.0;
    m[2].resize(2, 2);
    m[2] << 0.0, -1i, 1i, 0.0;
    m[3].resize(2, 2);
    m[3] << 1.0, 0.0, 0.0, -1.0;
    return m;
  }();
  return mats;
}

inline ComplexMatrix I() { return single()[0]; }
inline ComplexMatrix X() { return single()[1]; }
inline ComplexMatrix Y() { return single()[2]; }
inline ComplexMatrix Z() { return single()[3]; }

/// Label such as "IX" for basis element `index` (0-based, identity excluded).
inline std::string label(int n, int index) {
  static constexpr char kSym[] = {'I', 'X', 'Y', 'Z'};
  std::string s(static_cast<std::size_t>(n), 'I');
  int code = index + 1;
  for (int k = n - 1; k >= 0; --k) {
    s[static_cast<std::size_t>(k)] = kSym[code % 4];
    code /= 4;
  }
  return s;
}

}  // namespace pauli

/// All n-fold tensor products of {I,X,Y,Z} except the identity string, in
/// lexicographic order with I<X<Y<Z and the first qubit most significant.
/// The returned list is built once per n and shared.
inline const std::vector<ComplexMatrix>& pauli_basis(int n) {
  require_supported_qubits(n);
  static const std::array<std::vector<ComplexMatrix>, kMaxQubits> cache = [] {
    std::array<std::vector<ComplexMatrix>, kMaxQubits> all;
    for (int q = 1; q <= kMaxQubits; ++q) {
      auto& basis = all[static_cast<std::size_t>(q - 1)];
      basis.reserve(static_cast<std::size_t>(bloch_dim(q)));
      for (int code = 1; code < (1 << (2 * q)); ++code) {
        ComplexMatrix m = ComplexMatrix::Identity(1, 1);
        for (int k = q - 1; k >= 0; --k) {
          m = kron(m, pauli::single()[static_cast<std::size_t>((code >> (2 * k)) & 3)]);
        }
        basis.push_back(std::move(m));
      }
    }
    return all;
  }();
  return cache[static_cast<std::size_t>(n - 1)];
}

/// Quantum state of n qubits. Construction enforces shape, Hermiticity and
/// unit trace; positivity is checked on demand by `is_positive` / `validate`.
class DensityMatrix {
 public:
  DensityMatrix(int qubits, ComplexMatrix mat) : qubits_(qubits), mat_(std::move(mat)) {
    require_supported_qubits(qubits_);
    const int d = hilbert_dim(qubits_);
    if (mat_.rows() != d || mat_.cols() != d) {
      throw InvalidArgument("density matrix must be " + std::to_string(d) + "x" +
                            std::to_string(d));
    }
    if (hermiticity_error(mat_) > tol::kStructural) {
      throw InvalidArgument("density matrix is not Hermitian");
    }
    if (std::abs(mat_.trace() - Complex(1.0, 0.0)) > tol::kStructural) {
      throw InvalidArgument("density matrix trace is not 1");
    }
  }

  static DensityMatrix from_pure(const ComplexVector& psi) {
    const int n = static_cast<int>(std::lround(std::log2(static_cast<double>(psi.size()))));
    if (hilbert_dim(n) != psi.size()) throw InvalidArgument("state vector length is not 2^n");
    const ComplexVector u = psi / psi.norm();
    return DensityMatrix(n, u * u.adjoint());
  }

  static DensityMatrix maximally_mixed(int n) {
    require_supported_qubits(n);
    const int d = hilbert_dim(n);
    return DensityMatrix(n, ComplexMatrix::Identity(d, d) / static_cast<double>(d));
  }

  int qubits() const noexcept { return qubits_; }
  int dim() const noexcept { return hilbert_dim(qubits_); }
  const ComplexMatrix& matrix() const noexcept { return mat_; }

  RealVector eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(mat_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  bool is_positive(double tolerance = tol::kStructural) const {
    return eigenvalues().minCoeff() >= -tolerance;
  }

  /// Throws unless every density-matrix invariant holds.
  void validate() const {
    if (!is_positive()) throw InvalidArgument("density matrix has a negative eigenvalue");
  }

 private:
  int qubits_;
  ComplexMatrix mat_;
};

/// Generalised Bloch vector: real coefficients in the Pauli basis.
class BlochVector {
 public:
  BlochVector(int qubits, RealVector r) : qubits_(qubits), r_(std::move(r)) {
    require_supported_qubits(qubits_);
    if (r_.size() != bloch_dim(qubits_)) {
      throw InvalidArgument("Bloch vector for " + std::to_string(qubits_) +
                            " qubit(s) must have length " + std::to_string(bloch_dim(qubits_)));
    }
  }

  /// Infers n from the length.
  explicit BlochVector(RealVector r) : qubits_(qubits_from_bloch_dim(r.size())), r_(std::move(r)) {}

  int qubits() const noexcept { return qubits_; }
  const RealVector& r() const noexcept { return r_; }
  double operator[](Eigen::Index i) const { return r_[i]; }
  double norm2() const { return r_.squaredNorm(); }

  /// Within the norm bound that every physical state satisfies.
  bool within_norm_bound() const { return norm2() <= max_bloch_norm2(qubits_) + tol::kBlochNorm; }

 private:
  int qubits_;
  RealVector r_;
};

/// r_i = Re Tr[rho P_i].
inline BlochVector bloch_from_density(const DensityMatrix& rho) {
  const auto& basis = pauli_basis(rho.qubits());
  RealVector r(static_cast<Eigen::Index>(basis.size()));
  const ComplexMatrix& m = rho.matrix();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    // Tr[rho P] = sum_jk rho_jk P_kj
    r[static_cast<Eigen::Index>(i)] = m.cwiseProduct(basis[i].transpose()).sum().real();
  }
  return BlochVector(rho.qubits(), std::move(r));
}

/// (I + sum_i r_i P_i) / 2^n. Only the norm bound is checked, not positivity.
inline DensityMatrix density_from_bloch(const BlochVector& b) {
  if (!b.within_norm_bound()) throw InvalidArgument("unphysical Bloch vector");
  const int d = hilbert_dim(b.qubits());
  const auto& basis = pauli_basis(b.qubits());
  ComplexMatrix m = ComplexMatrix::Identity(d, d);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double c = b[static_cast<Eigen::Index>(i)];
    if (c != 0.0) m += c * basis[i];
  }
  m /= static_cast<double>(d);
  return DensityMatrix(b.qubits(), std::move(m));
}

/// Tr[rho^2] from the matrix.
inline double purity(const DensityMatrix& rho) {
  // Tr[rho rho] = sum |rho_jk|^2 for Hermitian rho
  return rho.matrix().squaredNorm();
}

/// (1 + |r|^2) / 2^n.
inline double purity(const BlochVector& b) {
  return (1.0 + b.norm2()) / static_cast<double>(hilbert_dim(b.qubits()));
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues
/// are clipped to zero.
inline ComplexMatrix hermitian_sqrt(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("hermitian_sqrt: matrix is not square");
  if (hermiticity_error(m) > tol::kSqrtInput) {
    throw InvalidArgument("hermitian_sqrt: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
  const RealVector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {
inline void require_same_qubits(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.qubits() != b.qubits()) throw InvalidArgument("fidelity: dimension mismatch");
}
inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }
}  // namespace detail

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1].
inline double fidelity_general(const DensityMatrix& rho, const DensityMatrix& sigma) {
  detail::require_same_qubits(rho, sigma);
  const ComplexMatrix s = hermitian_sqrt(rho.matrix());
  ComplexMatrix inner = s * sigma.matrix() * s;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(inner, Eigen::EigenvaluesOnly);
  const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return detail::clamp01(tr * tr);
}

/// Tr[rho sigma]; both states must be pure.
inline double fidelity_pure(const DensityMatrix& rho, const DensityMatrix& sigma) {
  detail::require_same_qubits(rho, sigma);
  if (std::abs(purity(rho) - 1.0) > tol::kPurePurity ||
      std::abs(purity(sigma) - 1.0) > tol::kPurePurity) {
    throw InvalidArgument("pure-state fidelity requires pure states");
  }
  return (rho.matrix() * sigma.matrix()).trace().real();
}

/// |Tr[rho sigma]| / sqrt(Tr[rho^2] Tr[sigma^2]).
inline double fidelity_mixed_alt(const DensityMatrix& rho, const DensityMatrix& sigma) {
  detail::require_same_qubits(rho, sigma);
  const double overlap = std::abs((rho.matrix() * sigma.matrix()).trace());
  return detail::clamp01(overlap / std::sqrt(purity(rho) * purity(sigma)));
}

/// (1 + r.s) / 2^n, the Bloch form of Tr[rho sigma].
inline double overlap_bloch(const BlochVector& r, const BlochVector& s) {
  if (r.qubits() != s.qubits()) throw InvalidArgument("fidelity: dimension mismatch");
  return (1.0 + r.r().dot(s.r())) / static_cast<double>(hilbert_dim(r.qubits()));
}

/// |1 + r.s| / sqrt((1 + |r|^2)(1 + |s|^2)), the Bloch form of fidelity_mixed_alt.
inline double fidelity_mixed_alt_bloch(const BlochVector& r, const BlochVector& s) {
  if (r.qubits() != s.qubits()) throw InvalidArgument("fidelity: dimension mismatch");
  return std::abs(1.0 + r.r().dot(s.r())) / std::sqrt((1.0 + r.norm2()) * (1.0 + s.norm2()));
}

/// Single-qubit fidelity in closed form from Bloch vectors.
inline double fidelity_bloch_1q(const BlochVector& r, const BlochVector& s) {
  if (r.qubits() != 1 || s.qubits() != 1) {
    throw InvalidArgument("fidelity_bloch_1q requires single-qubit Bloch vectors");
  }
  const double bound = 1.0 + tol::kBlochNorm;
  if (r.r().norm() > bound || s.r().norm() > bound) throw InvalidArgument("unphysical Bloch vector");
  const double mixed = std::max(0.0, 1.0 - r.norm2()) * std::max(0.0, 1.0 - s.norm2());
  return detail::clamp01(0.5 * (1.0 + r.r().dot(s.r()) + std::sqrt(mixed)));
}

}  // namespace qnr
