// qnr: dataset generation, training, evaluation, sweeps and Bloch-cloud export.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qnr/qnr.hpp"

namespace {

using namespace qnr;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::uint64_t resolve_seed(const Common& c) {
  std::uint64_t s = 0;
  if (c.seed) {
    s = *c.seed;
  } else {
    std::random_device rd;
    s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  std::printf("seed=%llu\n", static_cast<unsigned long long>(s));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    std::string part = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!part.empty()) out.push_back(std::move(part));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

void add_common(CLI::App* sub, Common& c, bool out_required, bool seeded = true) {
  if (seeded) sub->add_option("--seed", c.seed, "RNG seed (drawn from system entropy when omitted)");
  auto* out = sub->add_option("--out", c.out, "Output file");
  if (out_required) out->required();
  sub->add_option("--config", "Config file with key=value lines mirroring the flags (flags win)")
      ->check(CLI::ExistingFile);
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Appends the entries of a --config file as flags, skipping any flag that is
// already on the command line. Keys may sit at top level or in a section
// named after the subcommand.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty() || !CLI::ExistingFile(path).empty()) return args;
  const std::string sub = args.front();
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub)) continue;
    if (item.name.empty() || item.name == "++" || item.name == "--") continue;
    const std::string flag = "--" + item.name;
    if (flag == "--config" || flag_given(args, flag)) continue;
    if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "false")) {
      if (item.inputs[0] == "true") args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    args.insert(args.end(), item.inputs.begin(), item.inputs.end());
  }
  return args;
}

// Training flags shared by train and sweep.
struct Hyper {
  std::string loss;
  std::vector<int> hidden;
  std::optional<int> epochs;
  int batch = 0;
  double lr = 1e-3;
  std::string purity_mode = "exact_norm";
};

void add_hyper(CLI::App* sub, Hyper& h, std::vector<std::string> losses) {
  sub->add_option("--loss", h.loss, "Training loss")->check(CLI::IsMember(std::move(losses)));
  sub->add_option("--hidden", h.hidden, "Hidden layer widths, comma separated")->delimiter(',');
  sub->add_option("--epochs", h.epochs, "Training epochs");
  sub->add_option("--batch", h.batch, "Mini-batch size (0 = full batch up to 64 records, else 32)");
  sub->add_option("--lr", h.lr, "Adam learning rate");
  sub->add_option("--purity-mode", h.purity_mode, "Mixed-state output norm rule")
      ->check(CLI::IsMember({"exact_norm", "sqrt_purity"}));
}

exp::TrainConfig make_config(const Hyper& h, exp::Task task, int qubits, std::optional<StateKind> kind,
                             std::uint64_t seed) {
  exp::TrainConfig cfg = exp::default_config(task, qubits);
  if (h.loss == "mse") cfg.loss = nn::LossKind::mse;
  if (h.loss == "infidelity") cfg.loss = exp::infidelity_for(kind.value_or(StateKind::pure));
  if (h.loss == "cce") cfg.loss = nn::LossKind::cce;
  if (!h.hidden.empty()) cfg.hidden = h.hidden;
  if (h.epochs) cfg.epochs = *h.epochs;
  cfg.batch_size = h.batch;
  cfg.lr = h.lr;
  cfg.seed = seed;
  cfg.purity_mode = nn::parse_purity_mode(h.purity_mode);
  return cfg;
}

// ---- gen-data

struct GenOpts {
  Common common;
  std::string channel;
  std::string channels;
  int qubits = 1;
  std::size_t samples = 0;
  std::string kind = "pure";
  bool classify = false;
  std::string mode = "IN";
};

int run_gen_data(const GenOpts& o) {
  const std::uint64_t seed = resolve_seed(o.common);
  if (o.classify) {
    if (o.channels.empty()) throw InvalidArgument("--classify needs --channels \"spec;spec;...\"");
    const ClassDataset ds =
        build_classification_dataset(split(o.channels, ';'), o.qubits, o.samples, parse_class_mode(o.mode), seed);
    save_dataset(ds, o.common.out);
    std::printf("wrote %zu records (%d classes) to %s\n", ds.size(), ds.num_classes(), o.common.out.c_str());
    return 0;
  }
  if (o.channel.empty()) throw InvalidArgument("--channel is required unless --classify is given");
  const Dataset ds = build_reconstruction_dataset(o.channel, o.qubits, o.samples, parse_state_kind(o.kind), seed);
  save_dataset(ds, o.common.out);
  std::printf("wrote %zu records to %s\n", ds.size(), o.common.out.c_str());
  return 0;
}

// ---- train

struct TrainOpts {
  Common common;
  Hyper hyper;
  std::string task;
  std::string data;
  std::string test_data;
  std::string metrics;
};

int run_train(const TrainOpts& o) {
  const std::uint64_t seed = resolve_seed(o.common);
  const AnyDataset train = load_any_dataset(o.data);
  const AnyDataset test = load_any_dataset(o.test_data);
  const bool classify = std::holds_alternative<ClassDataset>(train);
  if (classify != std::holds_alternative<ClassDataset>(test)) {
    throw InvalidArgument("--data and --test-data hold different dataset types");
  }
  if (!o.task.empty() && (o.task == "classify") != classify) {
    throw InvalidArgument("--task " + o.task + " does not match the dataset type");
  }
  const std::string metrics_path = o.metrics.empty() ? o.common.out + ".metrics.csv" : o.metrics;

  exp::TrainResult result = [&] {
    if (classify) {
      const auto& tr = std::get<ClassDataset>(train);
      if (!o.hyper.loss.empty() && o.hyper.loss != "cce") throw InvalidArgument("classification trains with --loss cce");
      const auto cfg = make_config(o.hyper, exp::Task::classify, tr.qubits, std::nullopt, seed);
      return exp::train_classification(cfg, tr, std::get<ClassDataset>(test));
    }
    const auto& tr = std::get<Dataset>(train);
    if (o.hyper.loss == "cce") throw InvalidArgument("--loss cce is for classification");
    const auto cfg = make_config(o.hyper, exp::Task::reconstruct, tr.qubits, tr.kind, seed);
    return exp::train_reconstruction(cfg, tr, std::get<Dataset>(test));
  }();

  const std::uint64_t fp = std::visit([](const auto& ds) { return fingerprint(ds); }, train);
  nn::save_model(result.model, o.common.out, {classify ? "classify" : "reconstruct", fp});
  detail::write_file(metrics_path, exp::metrics_csv(result.log));
  const auto& rows = result.log.epochs;
  std::fprintf(stderr, "epochs=%zu loss first=%.6g last=%.6g time=%.2fs\n", rows.size(), rows.front().train_loss,
               rows.back().train_loss, result.log.seconds);
  std::printf("model: %s\nmetrics: %s\n", o.common.out.c_str(), metrics_path.c_str());
  std::printf("%s=%.6f\n", result.log.metric.c_str(), result.log.final_metric);
  return 0;
}

// ---- eval

struct EvalOpts {
  Common common;
  std::string model;
  std::string data;
};

int run_eval(const EvalOpts& o) {
  const auto [model, meta] = nn::load_model(o.model);
  const AnyDataset data = load_any_dataset(o.data);
  const std::uint64_t fp = std::visit([](const auto& ds) { return fingerprint(ds); }, data);
  if (meta.train_fingerprint != 0 && fp == meta.train_fingerprint) {
    std::fprintf(stderr, "warning: train/test overlap (evaluating on the training data)\n");
  }
  std::string line;
  if (const auto* ds = std::get_if<ClassDataset>(&data)) {
    line = "ACC=" + std::to_string(exp::evaluate_accuracy(model, *ds));
  } else {
    line = "ATF=" + std::to_string(exp::evaluate_atf(model, std::get<Dataset>(data)));
  }
  if (!o.common.out.empty()) detail::write_file(o.common.out, line + "\n");
  std::printf("%s\n", line.c_str());
  return 0;
}

// ---- sweep

struct SweepOpts {
  Common common;
  Hyper hyper;
  std::string channel;
  int qubits = 1;
  std::string kind = "pure";
  std::vector<std::size_t> sizes{10, 30, 100, 300};
  int repeats = 5;
  std::size_t test_size = 500;
  int jobs = 1;
};

int run_sweep(const SweepOpts& o) {
  const std::uint64_t seed = resolve_seed(o.common);
  const StateKind kind = parse_state_kind(o.kind);
  const auto cfg = make_config(o.hyper, exp::Task::reconstruct, o.qubits, kind, seed);
  for (const std::size_t s : o.sizes) {
    if (cfg.batch_size > 0 && static_cast<std::size_t>(cfg.batch_size) > s) {
      throw InvalidArgument("--batch exceeds sweep size " + std::to_string(s));
    }
  }
  const exp::ReconstructionRun base{o.channel, o.qubits, kind, 0, o.test_size};
  const auto rows = exp::sweep_dataset_size(cfg, base, o.sizes, o.repeats, o.jobs);
  detail::write_file(o.common.out, exp::sweep_csv(rows));
  std::printf("%8s %10s %10s %10s\n", "size", "mean", "std", "best");
  for (const auto& r : rows) std::printf("%8zu %10.6f %10.6f %10.6f\n", r.size, r.mean, r.stddev, r.best);
  std::printf("table: %s\n", o.common.out.c_str());
  return 0;
}

// ---- bloch-cloud

struct CloudOpts {
  Common common;
  std::string channel;
  std::size_t samples = 10000;
};

int run_cloud(const CloudOpts& o) {
  const std::uint64_t seed = resolve_seed(o.common);
  const auto pts = exp::bloch_cloud(o.channel, o.samples, seed);
  detail::write_file(o.common.out, exp::cloud_csv(pts));
  std::printf("wrote %zu point pairs to %s\n", pts.size(), o.common.out.c_str());
  return 0;
}

constexpr const char* kExamples = R"ex(Examples:
  Single-qubit reconstruction (pure states, phase flip):
    qnr gen-data --channel "Z(0.2)" --samples 30 --seed 1 --out z_train.jsonl
    qnr gen-data --channel "Z(0.2)" --samples 500 --seed 2 --out z_test.jsonl
    qnr train --data z_train.jsonl --test-data z_test.jsonl --loss mse --seed 3 --out z_model.json

  Two- and three-qubit reconstruction:
    qnr gen-data --channel "CAD(0.1,0.2)" --qubits 2 --samples 300 --seed 1 --out cad_train.jsonl
    qnr gen-data --channel "CAD(0.1,0.2)" --qubits 2 --samples 500 --seed 2 --out cad_test.jsonl
    qnr train --data cad_train.jsonl --test-data cad_test.jsonl --loss infidelity --seed 3 --out cad_model.json
    (three qubits: --channel "X(0.2)*Z(0.2)*Y(0.2)" --qubits 3 --samples 900)

  Channel classification (binary, ideal+noisy inputs):
    qnr gen-data --classify --channels "Z(0.2);GAD(0.5,0.3)" --mode IN --samples 300 --seed 1 --out c_train.jsonl
    qnr gen-data --classify --channels "Z(0.2);GAD(0.5,0.3)" --mode IN --samples 100 --seed 2 --out c_test.jsonl
    qnr train --data c_train.jsonl --test-data c_test.jsonl --seed 3 --out c_model.json
    (ternary: --channels "Z(0.2);GAD(0.5,0.3);DEP(0.3)" --samples 960, test 120)

  Dataset-size sweep and deformed Bloch sphere:
    qnr sweep --channel "Z(0.2)" --sizes 5,10,30,100,300 --repeats 5 --seed 1 --out sweep.csv
    qnr bloch-cloud --channel "Z(0.2)" --samples 10000 --seed 1 --out cloud.csv

Exit codes: 0 success, 2 usage or parse error, 1 runtime failure.)ex";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy quantum state reconstruction and channel classification"};
  app.footer(kExamples);
  app.require_subcommand(1);

  GenOpts gen;
  auto* g = app.add_subcommand("gen-data", "Generate a reconstruction or classification dataset");
  add_common(g, gen.common, true);
  g->add_option("--channel", gen.channel, "Channel spec, e.g. \"Z(0.2)*X(0.2)\"");
  g->add_option("--qubits", gen.qubits, "Number of qubits (1-3)");
  g->add_option("--samples", gen.samples, "Number of records")->required();
  g->add_option("--kind", gen.kind, "Input states")->check(CLI::IsMember({"pure", "mixed"}));
  g->add_flag("--classify", gen.classify, "Build a classification dataset");
  g->add_option("--channels", gen.channels, "Classification channels, ';' separated");
  g->add_option("--mode", gen.mode, "IN: ideal+noisy inputs, N: noisy only")->check(CLI::IsMember({"IN", "N"}));

  TrainOpts train;
  auto* t = app.add_subcommand("train", "Train a model and report ATF or accuracy on the test set");
  add_common(t, train.common, true);
  add_hyper(t, train.hyper, {"mse", "infidelity", "cce"});
  t->add_option("--task", train.task, "Task (inferred from the data when omitted)")
      ->check(CLI::IsMember({"reconstruct", "classify"}));
  t->add_option("--data", train.data, "Training dataset")->required()->check(CLI::ExistingFile);
  t->add_option("--test-data", train.test_data, "Test dataset")->required()->check(CLI::ExistingFile);
  t->add_option("--metrics", train.metrics, "Metrics CSV path (default <out>.metrics.csv)");

  EvalOpts eval;
  auto* e = app.add_subcommand("eval", "Evaluate a saved model on a dataset");
  add_common(e, eval.common, false, false);
  e->add_option("--model", eval.model, "Model file")->required()->check(CLI::ExistingFile);
  e->add_option("--data", eval.data, "Dataset")->required()->check(CLI::ExistingFile);

  SweepOpts sweep;
  auto* s = app.add_subcommand("sweep", "Final ATF against training-set size");
  add_common(s, sweep.common, true);
  add_hyper(s, sweep.hyper, {"mse", "infidelity"});
  s->add_option("--channel", sweep.channel, "Channel spec")->required();
  s->add_option("--qubits", sweep.qubits, "Number of qubits (1-3)");
  s->add_option("--kind", sweep.kind, "Input states")->check(CLI::IsMember({"pure", "mixed"}));
  s->add_option("--sizes", sweep.sizes, "Training-set sizes, comma separated")->delimiter(',');
  s->add_option("--repeats", sweep.repeats, "Runs per size");
  s->add_option("--test-size", sweep.test_size, "Test records per run");
  s->add_option("--jobs", sweep.jobs, "Worker threads")->check(CLI::PositiveNumber);

  CloudOpts cloud;
  auto* c = app.add_subcommand("bloch-cloud", "Export clean/noisy Bloch vector pairs for a single-qubit channel");
  add_common(c, cloud.common, true);
  c->add_option("--channel", cloud.channel, "Single-qubit channel spec")->required();
  c->add_option("--samples", cloud.samples, "Number of states");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (g->parsed()) return run_gen_data(gen);
    if (t->parsed()) return run_train(train);
    if (e->parsed()) return run_eval(eval);
    if (s->parsed()) return run_sweep(sweep);
    return run_cloud(cloud);
  } catch (const qnr::ParseError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const qnr::InvalidArgument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitRuntime;
  }
}
