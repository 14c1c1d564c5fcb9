#pragma once

// Line-delimited dataset files.
//
// Line 1 is a JSON metadata object; every following line is one record:
//   reconstruction:  {"noisy":[...],"clean":[...]}
//   classification:  {"input":[...],"label":k}
// Floats are written with 17 significant digits so loading restores the
// exact doubles.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qnr/sampling.hpp"

namespace qnr {

inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline void append_double(std::string& out, double x) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", x);
  out.append(buf, static_cast<std::size_t>(len));
}

inline void append_vector(std::string& out, const RealVector& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    append_double(out, v[i]);
  }
  out += ']';
}

inline RealVector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of numbers");
  RealVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument("expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

inline nlohmann::ordered_json parse_header(const std::vector<std::string>& lines) {
  if (lines.empty()) throw ParseError("line 1: empty dataset file", 1);
  nlohmann::ordered_json h;
  try {
    h = nlohmann::ordered_json::parse(lines[0]);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("line 1: malformed metadata: ") + e.what(), 1);
  }
  if (!h.is_object() || h.value("format", "") != "qnr-dataset") {
    throw ParseError("line 1: not a qnr dataset file", 1);
  }
  if (h.value("version", 0) != kDatasetFormatVersion) {
    throw ParseError("line 1: unsupported dataset version", 1);
  }
  return h;
}

template <typename Fn>
void for_each_record(const std::vector<std::string>& lines, std::size_t declared, Fn&& fn) {
  if (lines.size() - 1 != declared) {
    throw ParseError("line " + std::to_string(lines.size() + 1) + ": record count mismatch: header declares " +
                         std::to_string(declared) + ", file has " + std::to_string(lines.size() - 1),
                     lines.size() + 1);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      fn(nlohmann::json::parse(lines[i]));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(i + 1) + ": malformed record: " + e.what(), i + 1);
    }
  }
}

// Maps "record k: ..." from verify() onto the file line that holds it.
template <typename Ds>
void verify_on_load(const Ds& ds) {
  try {
    verify(ds);
  } catch (const InvalidArgument& e) {
    std::string msg = e.what();
    std::size_t line = 0;
    if (msg.rfind("record ", 0) == 0) line = std::stoul(msg.substr(7)) + 2;
    throw ParseError("line " + std::to_string(line) + ": " + msg, line);
  }
}

}  // namespace detail

inline std::string serialize(const Dataset& ds) {
  nlohmann::ordered_json h;
  h["format"] = "qnr-dataset";
  h["version"] = kDatasetFormatVersion;
  h["type"] = "reconstruction";
  h["n"] = ds.qubits;
  h["kind"] = std::string(to_string(ds.kind));
  h["channel_spec"] = ds.channel_spec;
  h["M"] = ds.size();
  h["seed"] = ds.seed;
  h["generator"] = ds.generator;
  std::string out = h.dump() + "\n";
  for (const auto& rec : ds.records) {
    out += "{\"noisy\":";
    detail::append_vector(out, rec.noisy);
    out += ",\"clean\":";
    detail::append_vector(out, rec.clean);
    out += "}\n";
  }
  return out;
}

inline std::string serialize(const ClassDataset& ds) {
  nlohmann::ordered_json h;
  h["format"] = "qnr-dataset";
  h["version"] = kDatasetFormatVersion;
  h["type"] = "classification";
  h["n"] = ds.qubits;
  h["mode"] = std::string(to_string(ds.mode));
  h["channel_specs"] = ds.channel_specs;
  h["M"] = ds.size();
  h["seed"] = ds.seed;
  h["generator"] = ds.generator;
  std::string out = h.dump() + "\n";
  for (const auto& rec : ds.records) {
    out += "{\"input\":";
    detail::append_vector(out, rec.input);
    out += ",\"label\":" + std::to_string(rec.label) + "}\n";
  }
  return out;
}

using AnyDataset = std::variant<Dataset, ClassDataset>;

/// Parses dataset text and re-checks every invariant. Errors carry the
/// 1-based line number.
inline AnyDataset deserialize_dataset(const std::string& text) {
  const auto lines = detail::split_lines(text);
  const auto h = detail::parse_header(lines);
  try {
    const std::string type = h.at("type").get<std::string>();
    const std::size_t declared = h.at("M").get<std::size_t>();
    if (type == "reconstruction") {
      Dataset ds;
      ds.qubits = h.at("n").get<int>();
      ds.kind = parse_state_kind(h.at("kind").get<std::string>());
      ds.channel_spec = h.at("channel_spec").get<std::string>();
      ds.seed = h.at("seed").get<std::uint64_t>();
      ds.generator = h.at("generator").get<std::string>();
      ds.records.reserve(declared);
      detail::for_each_record(lines, declared, [&](const nlohmann::json& j) {
        ds.records.push_back({detail::vector_from_json(j.at("noisy")), detail::vector_from_json(j.at("clean"))});
      });
      detail::verify_on_load(ds);
      return ds;
    }
    if (type == "classification") {
      ClassDataset ds;
      ds.qubits = h.at("n").get<int>();
      ds.mode = parse_class_mode(h.at("mode").get<std::string>());
      ds.channel_specs = h.at("channel_specs").get<std::vector<std::string>>();
      ds.seed = h.at("seed").get<std::uint64_t>();
      ds.generator = h.at("generator").get<std::string>();
      ds.records.reserve(declared);
      detail::for_each_record(lines, declared, [&](const nlohmann::json& j) {
        ds.records.push_back({detail::vector_from_json(j.at("input")), j.at("label").get<int>()});
      });
      detail::verify_on_load(ds);
      return ds;
    }
    throw ParseError("line 1: unknown dataset type '" + type + "'", 1);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("line 1: bad metadata: ") + e.what(), 1);
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("line 1: bad metadata: ") + e.what(), 1);
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  detail::write_file(path, serialize(ds));
}

inline void save_dataset(const ClassDataset& ds, const std::string& path) {
  detail::write_file(path, serialize(ds));
}

inline AnyDataset load_any_dataset(const std::string& path) {
  return deserialize_dataset(detail::read_file(path));
}

inline Dataset load_dataset(const std::string& path) {
  auto any = load_any_dataset(path);
  if (auto* ds = std::get_if<Dataset>(&any)) return std::move(*ds);
  throw ParseError("line 1: '" + path + "' is a classification dataset", 1);
}

inline ClassDataset load_class_dataset(const std::string& path) {
  auto any = load_any_dataset(path);
  if (auto* ds = std::get_if<ClassDataset>(&any)) return std::move(*ds);
  throw ParseError("line 1: '" + path + "' is a reconstruction dataset", 1);
}

/// Content hash of the serialized dataset.
template <typename Ds>
std::uint64_t fingerprint(const Ds& ds) {
  return fnv1a(serialize(ds));
}

}  // namespace qnr
