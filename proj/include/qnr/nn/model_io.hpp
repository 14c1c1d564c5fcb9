#pragma once

// Versioned JSON model file, one layer per line, floats at 17 significant
// digits so that load followed by save reproduces the file byte for byte.

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "qnr/dataset_io.hpp"
#include "qnr/nn/mlp.hpp"

namespace qnr::nn {

inline constexpr int kModelFormatVersion = 1;

/// Training metadata stored next to the weights.
struct ModelMeta {
  std::string task;                    // "reconstruct" or "classify"
  std::uint64_t train_fingerprint = 0;  // content hash of the training dataset
};

inline std::string serialize_model(const MlpModel& model, const ModelMeta& meta = {}) {
  nlohmann::ordered_json h;
  h["kind"] = std::string(to_string(model.head().kind));
  h["target_norm"] = model.head().target_norm;
  h["target_purity"] = model.head().target_purity;
  h["purity_mode"] = std::string(to_string(model.head().purity_mode));
  h["qubits"] = model.head().qubits;

  std::string out = "{\"format\":\"qnr-model\",\"version\":" + std::to_string(kModelFormatVersion);
  out += ",\"task\":" + nlohmann::json(meta.task).dump();
  out += ",\"train_fingerprint\":" + std::to_string(meta.train_fingerprint);
  out += ",\"layer_dims\":" + nlohmann::json(model.layer_dims()).dump();
  out += ",\"head\":{\"kind\":" + h["kind"].dump() + ",\"target_norm\":";
  qnr::detail::append_double(out, model.head().target_norm);
  out += ",\"target_purity\":";
  qnr::detail::append_double(out, model.head().target_purity);
  out += ",\"purity_mode\":" + h["purity_mode"].dump() + ",\"qubits\":" + std::to_string(model.head().qubits) + "}";
  out += ",\"layers\":[\n";
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    const auto w = model.weight(k);
    out += "{\"W\":[";
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      if (i) out += ',';
      qnr::detail::append_vector(out, w.row(i).transpose());
    }
    out += "],\"b\":";
    qnr::detail::append_vector(out, model.bias(k));
    out += k + 1 < model.num_layers() ? "},\n" : "}\n";
  }
  out += "]}\n";
  return out;
}

inline std::pair<MlpModel, ModelMeta> deserialize_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what(), 0);
  }
  try {
    if (j.at("format") != "qnr-model") throw ParseError("not a qnr model file", 0);
    if (j.at("version").get<int>() != kModelFormatVersion) throw ParseError("unsupported model version", 0);
    ModelMeta meta{j.at("task").get<std::string>(), j.at("train_fingerprint").get<std::uint64_t>()};
    const auto& jh = j.at("head");
    HeadSpec head;
    head.kind = parse_head_kind(jh.at("kind").get<std::string>());
    head.target_norm = jh.at("target_norm").get<double>();
    head.target_purity = jh.at("target_purity").get<double>();
    head.purity_mode = parse_purity_mode(jh.at("purity_mode").get<std::string>());
    head.qubits = jh.at("qubits").get<int>();
    MlpModel model(j.at("layer_dims").get<std::vector<int>>(), head);
    const auto& layers = j.at("layers");
    if (layers.size() != model.num_layers()) throw ParseError("layer count does not match layer_dims", 0);
    for (std::size_t k = 0; k < model.num_layers(); ++k) {
      auto w = model.weight(k);
      const auto& rows = layers[k].at("W");
      if (static_cast<Eigen::Index>(rows.size()) != w.rows()) throw ParseError("weight shape mismatch", 0);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const RealVector row = qnr::detail::vector_from_json(rows[static_cast<std::size_t>(i)]);
        if (row.size() != w.cols()) throw ParseError("weight shape mismatch", 0);
        w.row(i) = row.transpose();
      }
      const RealVector b = qnr::detail::vector_from_json(layers[k].at("b"));
      if (b.size() != model.bias(k).size()) throw ParseError("bias shape mismatch", 0);
      model.bias(k) = b;
    }
    return {std::move(model), std::move(meta)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed model file: ") + e.what(), 0);
  }
}

inline void save_model(const MlpModel& model, const std::string& path, const ModelMeta& meta = {}) {
  qnr::detail::write_file(path, serialize_model(model, meta));
}

inline std::pair<MlpModel, ModelMeta> load_model(const std::string& path) {
  return deserialize_model(qnr::detail::read_file(path));
}

}  // namespace qnr::nn
