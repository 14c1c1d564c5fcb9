#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qnr/channel_spec.hpp"
#include "qnr/channels.hpp"
#include "qnr/qstate.hpp"
#include "qnr/rng.hpp"

namespace qnr {

/// |psi><psi| with psi a normalized vector of i.i.d. complex Gaussians, which
/// is Haar distributed.
inline DensityMatrix haar_pure(int n, Rng& rng) {
  require_supported_qubits(n);
  ComplexVector psi(hilbert_dim(n));
  for (auto& c : psi) c = rng.complex_normal();
  psi.normalize();
  return DensityMatrix(n, psi * psi.adjoint());
}

/// G G^dagger / Tr[G G^dagger] for a square complex Ginibre matrix G
/// (Hilbert-Schmidt measure on mixed states).
inline DensityMatrix ginibre_mixed(int n, Rng& rng) {
  require_supported_qubits(n);
  const int d = hilbert_dim(n);
  ComplexMatrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.complex_normal();
  }
  ComplexMatrix w = g * g.adjoint();
  w = 0.5 * (w + w.adjoint()).eval();
  return DensityMatrix(n, w / w.trace().real());
}

enum class StateKind { pure, mixed };

inline std::string_view to_string(StateKind k) { return k == StateKind::pure ? "pure" : "mixed"; }

inline StateKind parse_state_kind(std::string_view s) {
  if (s == "pure") return StateKind::pure;
  if (s == "mixed") return StateKind::mixed;
  throw InvalidArgument("unknown state kind '" + std::string(s) + "' (expected pure|mixed)");
}

struct BlochPair {
  RealVector noisy;
  RealVector clean;
};

/// Noisy/clean Bloch-vector pairs produced by one channel.
struct Dataset {
  int qubits = 1;
  StateKind kind = StateKind::pure;
  std::string channel_spec;
  std::uint64_t seed = 0;
  std::string generator{kGeneratorName};
  std::vector<BlochPair> records;

  std::size_t size() const noexcept { return records.size(); }
};

enum class ClassMode { IN, N };

inline std::string_view to_string(ClassMode m) { return m == ClassMode::IN ? "IN" : "N"; }

inline ClassMode parse_class_mode(std::string_view s) {
  if (s == "IN") return ClassMode::IN;
  if (s == "N") return ClassMode::N;
  throw InvalidArgument("unknown classification mode '" + std::string(s) + "' (expected IN|N)");
}

struct ClassRecord {
  RealVector input;  // [noisy | clean] in IN mode, noisy only in N mode
  int label;
};

/// Channel-labelled inputs for noise classification.
struct ClassDataset {
  int qubits = 1;
  ClassMode mode = ClassMode::IN;
  std::vector<std::string> channel_specs;
  std::uint64_t seed = 0;
  std::string generator{kGeneratorName};
  std::vector<ClassRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  int num_classes() const noexcept { return static_cast<int>(channel_specs.size()); }
  int input_dim() const noexcept {
    return mode == ClassMode::IN ? 2 * bloch_dim(qubits) : bloch_dim(qubits);
  }
};

namespace detail {

inline KrausChannel channel_for(std::string_view spec, int n) {
  KrausChannel ch = parse_channel_spec(spec);
  if (ch.qubits() != n) {
    throw InvalidArgument("channel '" + std::string(spec) + "' acts on " +
                          std::to_string(ch.qubits()) + " qubit(s), dataset has " +
                          std::to_string(n));
  }
  return ch;
}

}  // namespace detail

/// M i.i.d. states of the requested kind sent through `channel_spec`.
/// Record m is drawn from substream m of `seed`, so the result does not
/// depend on generation order.
inline Dataset build_reconstruction_dataset(std::string_view channel_spec, int n, std::size_t M,
                                            StateKind kind, std::uint64_t seed) {
  require_supported_qubits(n);
  if (M < 1) throw InvalidArgument("dataset needs at least one record");
  const KrausChannel ch = detail::channel_for(channel_spec, n);

  Dataset ds;
  ds.qubits = n;
  ds.kind = kind;
  ds.channel_spec = std::string(channel_spec);
  ds.seed = seed;
  ds.records.reserve(M);
  const Rng root(seed);
  for (std::size_t m = 0; m < M; ++m) {
    Rng rng = root.substream(m);
    const DensityMatrix rho = kind == StateKind::pure ? haar_pure(n, rng) : ginibre_mixed(n, rng);
    ds.records.push_back({bloch_from_density(apply(ch, rho)).r(), bloch_from_density(rho).r()});
  }
  return ds;
}

/// Balanced classification data: record m uses channel m mod C on a fresh
/// Haar-random pure state.
inline ClassDataset build_classification_dataset(const std::vector<std::string>& channel_specs,
                                                 int n, std::size_t M, ClassMode mode,
                                                 std::uint64_t seed) {
  require_supported_qubits(n);
  if (channel_specs.size() < 2) throw InvalidArgument("classification needs at least two channels");
  if (M < 1) throw InvalidArgument("dataset needs at least one record");
  std::vector<KrausChannel> channels;
  for (const auto& s : channel_specs) channels.push_back(detail::channel_for(s, n));

  ClassDataset ds;
  ds.qubits = n;
  ds.mode = mode;
  ds.channel_specs = channel_specs;
  ds.seed = seed;
  ds.records.reserve(M);
  const Rng root(seed);
  const int dim = bloch_dim(n);
  for (std::size_t m = 0; m < M; ++m) {
    Rng rng = root.substream(m);
    const int label = static_cast<int>(m % channels.size());
    const DensityMatrix rho = haar_pure(n, rng);
    const RealVector noisy = bloch_from_density(apply(channels[static_cast<std::size_t>(label)], rho)).r();
    RealVector input(ds.input_dim());
    input.head(dim) = noisy;
    if (mode == ClassMode::IN) input.tail(dim) = bloch_from_density(rho).r();
    ds.records.push_back({std::move(input), label});
  }
  return ds;
}

/// Checks the dataset invariants; throws InvalidArgument naming the first
/// offending record (0-based).
inline void verify(const Dataset& ds) {
  require_supported_qubits(ds.qubits);
  const KrausChannel ch = detail::channel_for(ds.channel_spec, ds.qubits);
  const int dim = bloch_dim(ds.qubits);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    const std::string where = "record " + std::to_string(i) + ": ";
    if (rec.noisy.size() != dim || rec.clean.size() != dim) {
      throw InvalidArgument(where + "wrong Bloch-vector length");
    }
    const BlochVector clean(ds.qubits, rec.clean);
    if (!clean.within_norm_bound()) throw InvalidArgument(where + "unphysical Bloch vector");
    if (ds.kind == StateKind::pure && std::abs(clean.norm2() - max_bloch_norm2(ds.qubits)) > 1e-8) {
      throw InvalidArgument(where + "clean state is not pure");
    }
    const RealVector expect = apply(ch, clean).r();
    if ((expect - rec.noisy).cwiseAbs().maxCoeff() > tol::kStructural) {
      throw InvalidArgument(where + "noisy vector does not match the channel image of clean");
    }
  }
}

inline void verify(const ClassDataset& ds) {
  require_supported_qubits(ds.qubits);
  std::vector<KrausChannel> channels;
  for (const auto& s : ds.channel_specs) channels.push_back(detail::channel_for(s, ds.qubits));
  const int dim = bloch_dim(ds.qubits);
  std::vector<std::size_t> counts(channels.size(), 0);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& rec = ds.records[i];
    const std::string where = "record " + std::to_string(i) + ": ";
    if (rec.input.size() != ds.input_dim()) throw InvalidArgument(where + "wrong input length");
    if (rec.label < 0 || rec.label >= ds.num_classes()) throw InvalidArgument(where + "label out of range");
    ++counts[static_cast<std::size_t>(rec.label)];
    if (ds.mode == ClassMode::IN) {
      const BlochVector clean(ds.qubits, rec.input.tail(dim));
      if (!clean.within_norm_bound()) throw InvalidArgument(where + "unphysical Bloch vector");
      const RealVector expect = apply(channels[static_cast<std::size_t>(rec.label)], clean).r();
      if ((expect - rec.input.head(dim)).cwiseAbs().maxCoeff() > tol::kStructural) {
        throw InvalidArgument(where + "noisy vector does not match the channel image of clean");
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (!ds.records.empty() && *hi - *lo > 1) throw InvalidArgument("class labels are not balanced");
}

}  // namespace qnr
