#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qnr/channel_spec.hpp"
#include "qnr/dataset_io.hpp"
#include "qnr/nn/adam.hpp"
#include "qnr/nn/mlp.hpp"
#include "qnr/sampling.hpp"

namespace qnr::exp {

using nn::HeadSpec;
using nn::LossKind;
using nn::MlpModel;
using nn::PurityMode;

enum class Task { reconstruct, classify };

struct TrainConfig {
  Task task = Task::reconstruct;
  LossKind loss = LossKind::mse;
  std::vector<int> hidden{128, 128};
  int epochs = 500;
  int batch_size = 0;  // 0 picks the default for the dataset size
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int repeats = 1;
  PurityMode purity_mode = PurityMode::exact_norm;
};

/// Full batch up to 64 records, 32 above.
inline int default_batch_size(std::size_t M) { return M <= 64 ? static_cast<int>(M) : 32; }

/// Default hyperparameters for an n-qubit task.
inline TrainConfig default_config(Task task, int n) {
  TrainConfig cfg;
  cfg.task = task;
  cfg.loss = task == Task::classify ? LossKind::cce : LossKind::mse;
  cfg.hidden = n >= 3 ? std::vector<int>{128, 128, 128} : std::vector<int>{128, 128};
  cfg.epochs = n == 1 ? 500 : 1000;
  return cfg;
}

/// The infidelity loss that matches the state kind of the data.
inline LossKind infidelity_for(StateKind kind) {
  return kind == StateKind::pure ? LossKind::infidelity_pure : LossKind::infidelity_mixed;
}

struct EpochRow {
  int epoch;
  double train_loss;  // the objective that drove training
  double mse;         // recorded for reconstruction regardless of the training loss
  double infidelity;
};

struct MetricsLog {
  std::vector<EpochRow> epochs;
  std::string metric;  // "ATF" or "ACC"
  double final_metric = 0.0;
  std::size_t test_size = 0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MlpModel model;
  MetricsLog log;
};

namespace detail {

struct Columns {
  nn::Matrix inputs;
  nn::Matrix targets;
  std::vector<int> labels;
  std::vector<double> purities;
};

inline Columns columns(const Dataset& ds) {
  const int dim = bloch_dim(ds.qubits);
  const auto M = static_cast<Eigen::Index>(ds.size());
  Columns c{nn::Matrix(dim, M), nn::Matrix(dim, M), {}, std::vector<double>(ds.size())};
  for (Eigen::Index i = 0; i < M; ++i) {
    const auto& rec = ds.records[static_cast<std::size_t>(i)];
    c.inputs.col(i) = rec.noisy;
    c.targets.col(i) = rec.clean;
    c.purities[static_cast<std::size_t>(i)] = (1.0 + rec.clean.squaredNorm()) / hilbert_dim(ds.qubits);
  }
  return c;
}

inline Columns columns(const ClassDataset& ds) {
  const auto M = static_cast<Eigen::Index>(ds.size());
  Columns c{nn::Matrix(ds.input_dim(), M), {}, std::vector<int>(ds.size()), {}};
  for (Eigen::Index i = 0; i < M; ++i) {
    const auto& rec = ds.records[static_cast<std::size_t>(i)];
    c.inputs.col(i) = rec.input;
    c.labels[static_cast<std::size_t>(i)] = rec.label;
  }
  return c;
}

inline nn::Batch gather(const Columns& all, std::span<const std::size_t> idx) {
  nn::Batch b;
  const auto B = static_cast<Eigen::Index>(idx.size());
  b.inputs.resize(all.inputs.rows(), B);
  if (all.targets.size() > 0) b.targets.resize(all.targets.rows(), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const auto i = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]);
    b.inputs.col(j) = all.inputs.col(i);
    if (all.targets.size() > 0) b.targets.col(j) = all.targets.col(i);
    if (!all.labels.empty()) b.labels.push_back(all.labels[static_cast<std::size_t>(i)]);
    if (!all.purities.empty()) b.purities.push_back(all.purities[static_cast<std::size_t>(i)]);
  }
  return b;
}

// Fisher-Yates with the library generator so the order is reproducible
// across standard libraries.
inline void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
  }
}

inline void check_config(const TrainConfig& cfg, std::size_t M) {
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (!(cfg.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (cfg.batch_size < 0 || static_cast<std::size_t>(cfg.batch_size) > M) {
    throw InvalidArgument("batch size must lie in [1, M]");
  }
  for (const int h : cfg.hidden) {
    if (h <= 0) throw InvalidArgument("hidden layer sizes must be positive");
  }
}

inline std::vector<int> layer_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

// Shuffled mini-batch Adam. `record` receives the forward outputs and batch
// of every step so callers can log extra curves.
template <typename Record>
MlpModel fit(MlpModel model, const Columns& data, const TrainConfig& cfg, LossKind loss,
             std::vector<EpochRow>& rows, Record&& record) {
  const std::size_t M = static_cast<std::size_t>(data.inputs.cols());
  const std::size_t batch = cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size)
                                               : static_cast<std::size_t>(default_batch_size(M));
  Rng shuffle_rng = Rng(cfg.seed).substream("shuffle");
  nn::AdamState adam(model.parameter_count(), cfg.lr);
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rows.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    EpochRow row{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < M; start += batch) {
      const std::size_t len = std::min(batch, M - start);
      const nn::Batch b = gather(data, std::span<const std::size_t>(order).subspan(start, len));
      const auto lg = nn::backward(model, b, loss);
      row.train_loss += lg.loss * static_cast<double>(len);
      record(row, lg.outputs, b);
      nn::adam_step(adam, model.parameters(), lg.gradient);
    }
    row.train_loss /= static_cast<double>(M);
    row.mse /= static_cast<double>(M);
    row.infidelity /= static_cast<double>(M);
    rows.push_back(row);
  }
  return model;
}

}  // namespace detail

/// Mean Uhlmann fidelity between each clean state and the network's
/// reconstruction of its noisy image. Predictions beyond the pure-state norm
/// bound (possible only with a linear head) are scaled back onto it.
inline double evaluate_atf(const MlpModel& model, const Dataset& test) {
  if (model.head().kind == nn::HeadKind::softmax) throw InvalidArgument("evaluate_atf: head/task mismatch");
  if (test.size() == 0) throw InvalidArgument("evaluate_atf: empty test set");
  const auto cols = detail::columns(test);
  const nn::Matrix pred = nn::forward_batch(model, cols.inputs, cols.purities);
  const double bound = std::sqrt(max_bloch_norm2(test.qubits));
  double total = 0.0;
  for (Eigen::Index i = 0; i < pred.cols(); ++i) {
    RealVector s = pred.col(i);
    if (s.norm() > bound) s *= bound / s.norm();
    const DensityMatrix rho = density_from_bloch(BlochVector(test.qubits, cols.targets.col(i)));
    const DensityMatrix sigma = density_from_bloch(BlochVector(test.qubits, std::move(s)));
    total += fidelity_general(rho, sigma);
  }
  return total / static_cast<double>(pred.cols());
}

/// Fraction of test records whose argmax class equals the label.
inline double evaluate_accuracy(const MlpModel& model, const ClassDataset& test) {
  if (model.head().kind != nn::HeadKind::softmax) throw InvalidArgument("evaluate_accuracy: head/task mismatch");
  if (test.size() == 0) throw InvalidArgument("evaluate_accuracy: empty test set");
  const auto cols = detail::columns(test);
  const nn::Matrix probs = nn::forward_batch(model, cols.inputs);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    if (nn::predict_class(nn::Vector(probs.col(i))) == cols.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.cols());
}

/// Output head for reconstructing states of the given kind.
inline HeadSpec reconstruction_head(int n, StateKind kind, PurityMode mode) {
  return kind == StateKind::pure ? HeadSpec::pure_state(n) : HeadSpec::purity_rescale(n, 1.0, mode);
}

inline TrainResult train_reconstruction(const TrainConfig& cfg, const Dataset& train, const Dataset& test) {
  if (cfg.task != Task::reconstruct) throw InvalidArgument("train_reconstruction needs task=reconstruct");
  if (cfg.loss == LossKind::cce) throw InvalidArgument("loss/head mismatch: cce for reconstruction");
  if (train.qubits != test.qubits || train.kind != test.kind) {
    throw InvalidArgument("train and test datasets differ in qubit count or state kind");
  }
  if (train.size() == 0) throw InvalidArgument("empty training set");
  detail::check_config(cfg, train.size());
  const auto t0 = std::chrono::steady_clock::now();

  const int dim = bloch_dim(train.qubits);
  Rng init_rng = Rng(cfg.seed).substream("init");
  MlpModel model = nn::init_model(detail::layer_dims(dim, cfg.hidden, dim),
                                  reconstruction_head(train.qubits, train.kind, cfg.purity_mode), init_rng);
  const LossKind inf_kind = infidelity_for(train.kind);
  const auto data = detail::columns(train);

  MetricsLog log;
  log.metric = "ATF";
  log.seed = cfg.seed;
  model = detail::fit(std::move(model), data, cfg, cfg.loss, log.epochs,
                      [&](EpochRow& row, const nn::Matrix& out, const nn::Batch& b) {
                        const double B = static_cast<double>(out.cols());
                        row.mse += nn::loss_mse(out, b.targets) * B;
                        row.infidelity += nn::loss_infidelity(out, b.targets, inf_kind) * B;
                      });
  log.final_metric = evaluate_atf(model, test);
  log.test_size = test.size();
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(log)};
}

inline TrainResult train_classification(const TrainConfig& cfg, const ClassDataset& train,
                                        const ClassDataset& test) {
  if (cfg.task != Task::classify) throw InvalidArgument("train_classification needs task=classify");
  if (cfg.loss != LossKind::cce) throw InvalidArgument("loss/head mismatch: classification trains with cce");
  if (train.input_dim() != test.input_dim() || train.num_classes() != test.num_classes()) {
    throw InvalidArgument("train and test datasets have different shapes");
  }
  if (train.size() == 0) throw InvalidArgument("empty training set");
  detail::check_config(cfg, train.size());
  const auto t0 = std::chrono::steady_clock::now();

  Rng init_rng = Rng(cfg.seed).substream("init");
  MlpModel model = nn::init_model(detail::layer_dims(train.input_dim(), cfg.hidden, train.num_classes()),
                                  HeadSpec::softmax(), init_rng);
  const auto data = detail::columns(train);

  MetricsLog log;
  log.metric = "ACC";
  log.seed = cfg.seed;
  model = detail::fit(std::move(model), data, cfg, LossKind::cce, log.epochs,
                      [](EpochRow&, const nn::Matrix&, const nn::Batch&) {});
  for (auto& row : log.epochs) {
    row.mse = NAN;
    row.infidelity = NAN;
  }
  log.final_metric = evaluate_accuracy(model, test);
  log.test_size = test.size();
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(log)};
}

/// One reconstruction run with fresh train and test data derived from
/// `seed`; train and test come from independent substreams.
struct ReconstructionRun {
  std::string channel_spec;
  int qubits = 1;
  StateKind kind = StateKind::pure;
  std::size_t train_size = 30;
  std::size_t test_size = 500;
};

inline std::uint64_t train_data_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "train-data"); }
inline std::uint64_t test_data_seed(std::uint64_t run_seed) { return derive_seed(run_seed, "test-data"); }

inline TrainResult run_reconstruction(const TrainConfig& cfg, const ReconstructionRun& run) {
  const Dataset train = build_reconstruction_dataset(run.channel_spec, run.qubits, run.train_size, run.kind,
                                                     train_data_seed(cfg.seed));
  const Dataset test = build_reconstruction_dataset(run.channel_spec, run.qubits, run.test_size, run.kind,
                                                    test_data_seed(cfg.seed));
  return train_reconstruction(cfg, train, test);
}

/// Runs `count` independent jobs on up to `jobs` threads; results are
/// stored by index so the output does not depend on scheduling.
template <typename Fn>
auto parallel_map(std::size_t count, int jobs, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  std::vector<decltype(fn(std::size_t{}))> out(count);
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct SweepRow {
  std::size_t size;
  double mean;
  double stddev;  // sample standard deviation over repeats
  double best;
  std::vector<std::uint64_t> seeds;
  std::vector<double> atfs;
};

/// Final ATF against training-set size; each (size, repeat) cell uses fresh
/// data and a fresh initialization.
inline std::vector<SweepRow> sweep_dataset_size(const TrainConfig& cfg, const ReconstructionRun& base,
                                                const std::vector<std::size_t>& sizes, int repeats = 5,
                                                int jobs = 1) {
  if (repeats < 1) throw InvalidArgument("repeats must be at least 1");
  const auto R = static_cast<std::size_t>(repeats);
  auto seed_of = [&](std::size_t cell) { return derive_seed(derive_seed(cfg.seed, sizes[cell / R]), cell % R); };
  const auto atfs = parallel_map(sizes.size() * R, jobs, [&](std::size_t cell) {
    TrainConfig c = cfg;
    c.seed = seed_of(cell);
    ReconstructionRun run = base;
    run.train_size = sizes[cell / R];
    return run_reconstruction(c, run).log.final_metric;
  });
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    SweepRow row{sizes[s], 0.0, 0.0, 0.0, {}, {}};
    for (std::size_t r = 0; r < R; ++r) {
      row.seeds.push_back(seed_of(s * R + r));
      row.atfs.push_back(atfs[s * R + r]);
    }
    row.mean = std::accumulate(row.atfs.begin(), row.atfs.end(), 0.0) / static_cast<double>(R);
    double ss = 0.0;
    for (const double a : row.atfs) ss += (a - row.mean) * (a - row.mean);
    row.stddev = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1)) : 0.0;
    row.best = *std::max_element(row.atfs.begin(), row.atfs.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

struct CloudPoint {
  Eigen::Vector3d clean;
  Eigen::Vector3d noisy;
};

/// Haar-random pure single-qubit states and their images under the channel.
inline std::vector<CloudPoint> bloch_cloud(std::string_view channel_spec, std::size_t samples, std::uint64_t seed) {
  const KrausChannel ch = parse_channel_spec(channel_spec);
  if (ch.qubits() != 1) throw InvalidArgument("bloch_cloud needs a single-qubit channel");
  std::vector<CloudPoint> pts;
  pts.reserve(samples);
  const Rng root(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = root.substream(i);
    const DensityMatrix rho = haar_pure(1, rng);
    pts.push_back({bloch_from_density(rho).r(), bloch_from_density(apply(ch, rho)).r()});
  }
  return pts;
}

namespace detail {
inline void csv_double(std::string& out, double x) {
  if (std::isnan(x)) return;
  qnr::detail::append_double(out, x);
}
}  // namespace detail

/// Header, one row per epoch, then a summary row. Wall-clock time is not
/// written.
inline std::string metrics_csv(const MetricsLog& log) {
  std::string out = "row,epoch,train_loss,mse,infidelity,metric,value,test_size,seed\n";
  for (const auto& r : log.epochs) {
    out += "epoch," + std::to_string(r.epoch) + ",";
    detail::csv_double(out, r.train_loss);
    out += ',';
    detail::csv_double(out, r.mse);
    out += ',';
    detail::csv_double(out, r.infidelity);
    out += ",,,,\n";
  }
  out += "summary,,,,," + log.metric + ",";
  detail::csv_double(out, log.final_metric);
  out += "," + std::to_string(log.test_size) + "," + std::to_string(log.seed) + "\n";
  return out;
}

/// size,mean,std,best,seeds with the seeds joined by ';'.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "size,mean,std,best,seeds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.size) + ",";
    detail::csv_double(out, r.mean);
    out += ',';
    detail::csv_double(out, r.stddev);
    out += ',';
    detail::csv_double(out, r.best);
    out += ',';
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(r.seeds[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::string cloud_csv(const std::vector<CloudPoint>& pts) {
  std::string out = "clean_x,clean_y,clean_z,noisy_x,noisy_y,noisy_z\n";
  for (const auto& p : pts) {
    for (int i = 0; i < 3; ++i) {
      detail::csv_double(out, p.clean[i]);
      out += ',';
    }
    for (int i = 0; i < 3; ++i) {
      detail::csv_double(out, p.noisy[i]);
      out += i < 2 ? ',' : '\n';
    }
  }
  return out;
}

}  // namespace qnr::exp
