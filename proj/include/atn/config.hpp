#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "atn/error.hpp"

namespace atn {

// ---- flat key=value text ---------------------------------------------------

// Shortest decimal representation that round-trips through double.
inline std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw ArgumentError("format_double: unrepresentable");
  return std::string(buf, p);
}

struct KvConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  void set(const std::string& key, const std::string& value) { values[key] = value; }
  void set(const std::string& key, double value) { values[key] = format_double(value); }
  void set(const std::string& key, std::size_t value) { values[key] = std::to_string(value); }

  const std::string& get_string(const std::string& key,
                                const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& s = it->second;
    double out = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ParseError("config key '" + key + "': not a number: '" + s + "'");
    return out;
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& s = it->second;
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ParseError("config key '" + key + "': not a non-negative integer: '" +
                       s + "'");
    return out;
  }

  std::string render() const {  // keys in sorted order, one per line
    std::string out;
    for (const auto& [k, v] : values) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    }
    return out;
  }
};

// Lines are `key = value`; '#' starts a comment; blank lines are skipped.
// Duplicate keys keep the last assignment.
inline KvConfig parse_kv(const std::string& text) {
  auto trim = [](std::string s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    cfg.values[key] = val;
  }
  return cfg;
}

inline KvConfig parse_kv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_kv(ss.str());
}

// ---- run configuration -----------------------------------------------------

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::string item = s.substr(pos, comma - pos);
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    item = a == std::string::npos ? std::string() : item.substr(a, b - a + 1);
    if (!item.empty()) {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size())
        throw ParseError("seed list: bad entry '" + item + "'");
      out.push_back(v);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw ParseError("seed list: no seeds");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::string item = s.substr(pos, comma - pos);
    std::size_t a = item.find_first_not_of(" \t");
    std::size_t b = item.find_last_not_of(" \t");
    item = a == std::string::npos ? std::string() : item.substr(a, b - a + 1);
    if (!item.empty()) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || p != item.data() + item.size())
        throw ParseError("number list: bad entry '" + item + "'");
      out.push_back(v);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw ParseError("number list: no entries");
  return out;
}

inline std::string render_seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

// Relative data paths resolve against $ATN_DATA_ROOT when it is set.
inline std::string resolve_data_path(const std::string& path) {
  if (path.empty()) return path;
  if (std::filesystem::path(path).is_absolute()) return path;
  const char* root = std::getenv("ATN_DATA_ROOT");
  if (!root || !*root) return path;
  return (std::filesystem::path(root) / path).string();
}

struct RunConfig {
  std::string mode = "base";  // base | ag | af

  std::string train_path;    // aspect-level XML
  std::string test_path;     // aspect-level XML
  std::string doc_path;      // document corpus, leading-label lines
  std::string vectors_path;  // word vectors; empty = random init
  std::string dsc_checkpoint;  // pretrained teacher; empty = pretrain in-process
  std::string out_dir = "out";

  std::size_t d_e = 300;
  std::size_t d_h = 300;
  std::size_t d_p = 100;
  std::size_t max_position = 100;

  double lr = 0.1;
  double momentum = 0.9;
  double dropout = 0.5;
  double lambda = 0.4;
  std::size_t batch = 32;
  std::size_t epochs = 30;
  double dev_fraction = 0.2;

  double dsc_lr = 0.1;
  double dsc_momentum = 0.9;
  double dsc_dropout = 0.5;
  std::size_t dsc_epochs = 5;
  std::size_t dsc_batch = 64;
  double dsc_held_out = 0.1;
  double dsc_fraction = 1.0;
  std::uint64_t dsc_seed = 101;

  std::uint64_t vector_seed = 7;  // fills rows missing from the vectors file
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

namespace detail {

inline const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "mode",        "train_path",  "test_path",    "doc_path",
      "vectors_path", "dsc_checkpoint", "out_dir",  "d_e",
      "d_h",         "d_p",         "max_position", "lr",
      "momentum",    "dropout",     "lambda",       "batch",
      "epochs",      "dev_fraction", "dsc_lr",      "dsc_momentum",
      "dsc_dropout", "dsc_epochs",  "dsc_batch",    "dsc_held_out",
      "dsc_fraction", "dsc_seed",   "vector_seed",  "seeds"};
  return keys;
}

}  // namespace detail

// Unknown keys are errors: a typo silently falling back to a default would be
// invisible in the results.
inline RunConfig run_config_from_kv(const KvConfig& kv) {
  const auto& known = detail::run_config_keys();
  for (const auto& [k, v] : kv.values) {
    bool ok = false;
    for (const std::string& key : known) ok = ok || key == k;
    if (!ok) throw ParseError("unknown config key '" + k + "'");
  }
  RunConfig c;
  c.mode = kv.get_string("mode", c.mode);
  c.train_path = resolve_data_path(kv.get_string("train_path", c.train_path));
  c.test_path = resolve_data_path(kv.get_string("test_path", c.test_path));
  c.doc_path = resolve_data_path(kv.get_string("doc_path", c.doc_path));
  c.vectors_path = resolve_data_path(kv.get_string("vectors_path", c.vectors_path));
  c.dsc_checkpoint = resolve_data_path(kv.get_string("dsc_checkpoint", c.dsc_checkpoint));
  c.out_dir = kv.get_string("out_dir", c.out_dir);
  c.d_e = kv.get_size("d_e", c.d_e);
  c.d_h = kv.get_size("d_h", c.d_h);
  c.d_p = kv.get_size("d_p", c.d_p);
  c.max_position = kv.get_size("max_position", c.max_position);
  c.lr = kv.get_double("lr", c.lr);
  c.momentum = kv.get_double("momentum", c.momentum);
  c.dropout = kv.get_double("dropout", c.dropout);
  c.lambda = kv.get_double("lambda", c.lambda);
  c.batch = kv.get_size("batch", c.batch);
  c.epochs = kv.get_size("epochs", c.epochs);
  c.dev_fraction = kv.get_double("dev_fraction", c.dev_fraction);
  c.dsc_lr = kv.get_double("dsc_lr", c.dsc_lr);
  c.dsc_momentum = kv.get_double("dsc_momentum", c.dsc_momentum);
  c.dsc_dropout = kv.get_double("dsc_dropout", c.dsc_dropout);
  c.dsc_epochs = kv.get_size("dsc_epochs", c.dsc_epochs);
  c.dsc_batch = kv.get_size("dsc_batch", c.dsc_batch);
  c.dsc_held_out = kv.get_double("dsc_held_out", c.dsc_held_out);
  c.dsc_fraction = kv.get_double("dsc_fraction", c.dsc_fraction);
  c.dsc_seed = kv.get_size("dsc_seed", c.dsc_seed);
  c.vector_seed = kv.get_size("vector_seed", c.vector_seed);
  if (kv.has("seeds")) c.seeds = parse_seed_list(kv.get_string("seeds", ""));
  return c;
}

inline KvConfig run_config_to_kv(const RunConfig& c) {
  KvConfig kv;
  kv.set("mode", c.mode);
  kv.set("train_path", c.train_path);
  kv.set("test_path", c.test_path);
  kv.set("doc_path", c.doc_path);
  kv.set("vectors_path", c.vectors_path);
  kv.set("dsc_checkpoint", c.dsc_checkpoint);
  kv.set("out_dir", c.out_dir);
  kv.set("d_e", c.d_e);
  kv.set("d_h", c.d_h);
  kv.set("d_p", c.d_p);
  kv.set("max_position", c.max_position);
  kv.set("lr", c.lr);
  kv.set("momentum", c.momentum);
  kv.set("dropout", c.dropout);
  kv.set("lambda", c.lambda);
  kv.set("batch", c.batch);
  kv.set("epochs", c.epochs);
  kv.set("dev_fraction", c.dev_fraction);
  kv.set("dsc_lr", c.dsc_lr);
  kv.set("dsc_momentum", c.dsc_momentum);
  kv.set("dsc_dropout", c.dsc_dropout);
  kv.set("dsc_epochs", c.dsc_epochs);
  kv.set("dsc_batch", c.dsc_batch);
  kv.set("dsc_held_out", c.dsc_held_out);
  kv.set("dsc_fraction", c.dsc_fraction);
  kv.set("dsc_seed", static_cast<std::size_t>(c.dsc_seed));
  kv.set("vector_seed", static_cast<std::size_t>(c.vector_seed));
  kv.set("seeds", render_seed_list(c.seeds));
  return kv;
}

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from_kv(parse_kv_file(path));
}

// Checks ranges and that every file the run will read actually exists.
inline void validate_run_config(const RunConfig& c) {
  if (c.mode != "base" && c.mode != "ag" && c.mode != "af")
    throw ArgumentError("config: mode must be base, ag, or af (got '" + c.mode +
                        "')");
  if (c.lambda < 0.0) throw ArgumentError("config: lambda must be >= 0");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0) ||
      !(c.dsc_dropout >= 0.0 && c.dsc_dropout < 1.0))
    throw ArgumentError("config: dropout must lie in [0, 1)");
  if (!(c.dev_fraction > 0.0 && c.dev_fraction < 1.0))
    throw ArgumentError("config: dev_fraction must lie in (0, 1)");
  if (!(c.dsc_held_out > 0.0 && c.dsc_held_out < 1.0))
    throw ArgumentError("config: dsc_held_out must lie in (0, 1)");
  if (!(c.dsc_fraction >= 0.0 && c.dsc_fraction <= 1.0))
    throw ArgumentError("config: dsc_fraction must lie in [0, 1]");
  if (c.d_e == 0 || c.d_h == 0)
    throw ArgumentError("config: d_e and d_h must be positive");
  if (c.d_p > 0 && c.max_position == 0)
    throw ArgumentError("config: max_position must be positive when d_p > 0");
  if (c.batch == 0 || c.dsc_batch == 0)
    throw ArgumentError("config: batch sizes must be positive");
  if (c.seeds.empty()) throw ArgumentError("config: at least one seed");

  auto require_file = [](const std::string& what, const std::string& path) {
    if (path.empty())
      throw ArgumentError("config: " + what + " is required for this mode");
    if (!std::filesystem::exists(path))
      throw ArgumentError("config: " + what + " does not exist: " + path);
  };
  require_file("train_path", c.train_path);
  require_file("test_path", c.test_path);
  bool needs_teacher =
      (c.mode == "af" || (c.mode == "ag" && c.lambda > 0.0)) && c.dsc_fraction > 0.0;
  if (needs_teacher) {
    if (!c.dsc_checkpoint.empty())
      require_file("dsc_checkpoint", c.dsc_checkpoint);
    else
      require_file("doc_path", c.doc_path);
  }
  if (!c.vectors_path.empty() && !std::filesystem::exists(c.vectors_path))
    throw ArgumentError("config: vectors_path does not exist: " + c.vectors_path);
}

}  // namespace atn
