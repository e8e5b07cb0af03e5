#pragma once
// Run configuration. INI-style files with [section] headers and `key = value`
// lines; `#` and `;` start comments. Every known key carries a default, a
// file may overlay any subset, and command-line flags overlay last, so the
// effective precedence is flag > file > default. Unknown sections or keys are
// rejected with the offending field path. The resolved configuration renders
// to a canonical, sorted text block for embedding into artifacts.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "logo/cluster.hpp"
#include "logo/errors.hpp"
#include "logo/extraction.hpp"
#include "logo/model.hpp"
#include "logo/rng.hpp"
#include "logo/train.hpp"

namespace logo {

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace config_detail

class RunConfig {
 public:
  RunConfig() : values_(defaults()) {}

  static RunConfig from_file(const std::string& path) {
    RunConfig cfg;
    cfg.load_file(path);
    return cfg;
  }

  // Overlays `key = value` entries from an INI file onto the current values.
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string where = path + ":" + std::to_string(lineno);
      std::size_t comment = line.find_first_of("#;");
      if (comment != std::string::npos) line.erase(comment);
      line = config_detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
        section = config_detail::trim(line.substr(1, line.size() - 2));
        if (!values_.count(section)) throw ConfigError(where + ": unknown section [" + section + "]");
        continue;
      }
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected `key = value`");
      if (section.empty()) throw ConfigError(where + ": key outside any [section]");
      set(section, config_detail::trim(line.substr(0, eq)), config_detail::trim(line.substr(eq + 1)));
    }
  }

  // Single-value overlay used for both file entries and flags.
  void set(const std::string& section, const std::string& key, const std::string& value) {
    auto sec = values_.find(section);
    if (sec == values_.end()) throw ConfigError("config: unknown section [" + section + "]");
    auto it = sec->second.find(key);
    if (it == sec->second.end()) throw ConfigError("config: unknown key [" + section + "] " + key);
    it->second = value;
  }

  const std::string& str(const std::string& section, const std::string& key) const {
    return values_.at(section).at(key);
  }

  long long integer(const std::string& section, const std::string& key) const {
    const std::string& raw = str(section, key);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(raw, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != raw.size() || raw.empty()) {
      throw ConfigError("[" + section + "] " + key + ": not an integer: '" + raw + "'");
    }
    return v;
  }

  double real(const std::string& section, const std::string& key) const {
    return parse_real(str(section, key), section, key);
  }

  bool boolean(const std::string& section, const std::string& key) const {
    const std::string& raw = str(section, key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: '" + raw + "'");
  }

  std::vector<double> real_list(const std::string& section, const std::string& key) const {
    const std::string& raw = str(section, key);
    std::vector<double> out;
    std::string cur;
    std::istringstream is(raw);
    while (std::getline(is, cur, ',')) {
      cur = config_detail::trim(cur);
      if (cur.empty()) throw ConfigError("[" + section + "] " + key + ": empty list entry");
      out.push_back(parse_real(cur, section, key));
    }
    if (out.empty()) throw ConfigError("[" + section + "] " + key + ": empty list");
    return out;
  }

  // ---- derived quantities ----

  // Root seed; every stochastic subsystem derives its own stream from it.
  std::uint64_t seed() const {
    long long v = integer("run", "seed");
    if (v < 0) throw ConfigError("[run] seed: must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  Variant variant() const { return parse_variant(str("run", "variant")); }

  Split eval_split() const {
    const std::string& s = str("run", "split");
    for (Split sp : {Split::train, Split::val, Split::test}) {
      if (s == split_name(sp)) return sp;
    }
    throw ConfigError("[run] split: expected train, val, or test, got '" + s + "'");
  }

  ModelConfig model_config() const {
    ModelConfig m;
    m.d = checked_int("model", "d");
    m.layers_local = checked_int("model", "layers_local");
    m.layers_global = checked_int("model", "layers_global");
    m.t_local = checked_int("model", "t_local");
    m.t_global = checked_int("model", "t_global");
    m.variant = variant();
    // "auto" keeps the exact built-in midpoint slope; a number overrides it.
    if (str("model", "slope") != "auto") m.slope = real("model", "slope");
    m.sample_slope = boolean("model", "sample_slope");
    m.channels = checked_int("model", "channels");
    m.kernel = checked_int("model", "kernel");
    m.check();
    return m;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.lr = real("train", "lr");
    t.weight_decay = real("train", "weight_decay");
    t.epochs = checked_int("train", "epochs");
    t.patience = checked_int("train", "patience");
    t.seed = seed();
    if (t.lr <= 0) throw ConfigError("[train] lr: must be positive");
    if (t.weight_decay < 0) throw ConfigError("[train] weight_decay: must be non-negative");
    if (t.epochs < 1) throw ConfigError("[train] epochs: must be at least 1");
    if (t.patience < 1) throw ConfigError("[train] patience: must be at least 1");
    return t;
  }

  ClusterConfig cluster_config() const {
    ClusterConfig c;
    c.lambda = real("cluster", "lambda");
    c.min_cluster_size = checked_int("cluster", "min_cluster_size");
    c.reduced_dim = checked_int("cluster", "reduced_dim");
    c.seed = derive_seed(seed(), "cluster");
    c.check();
    return c;
  }

  SplitThresholds split_thresholds() const {
    SplitThresholds th;
    th.h_a = checked_int("cluster", "h_a");
    th.h_t = checked_int("cluster", "h_t");
    th.check();
    return th;
  }

  AssemblyConfig assembly_config() const {
    AssemblyConfig a;
    a.min_days = checked_int("cluster", "min_days");
    a.min_events = checked_int("cluster", "min_events");
    a.val_years = checked_int("cluster", "val_years");
    a.test_years = checked_int("cluster", "test_years");
    a.year_days = checked_int("cluster", "year_days");
    a.check();
    return a;
  }

  HttpOptions http_options() const {
    HttpOptions h;
    h.host = str("extract", "http_host");
    h.port = checked_int("extract", "http_port");
    h.path = str("extract", "http_path");
    h.model = str("extract", "http_model");
    h.api_key_env = str("extract", "api_key_env");
    h.timeout_seconds = checked_int("extract", "timeout_seconds");
    h.max_retries = checked_int("extract", "max_retries");
    return h;
  }

  LinkOptions link_options() const {
    LinkOptions l;
    l.k = checked_int("extract", "link_k");
    l.rounds = checked_int("extract", "link_rounds");
    l.embed_dim = checked_int("extract", "embed_dim");
    l.seed = derive_seed(seed(), "linking");
    return l;
  }

  // Canonical text form of the resolved configuration, one `key = value` per
  // line under sorted section headers, every line prefixed (used to embed the
  // configuration into artifacts as comments). Output paths are never part of
  // the configuration, so artifacts stay location-independent.
  std::string render(const std::string& prefix = "") const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, entries] : values_) {
      if (!first) os << prefix << "\n";
      first = false;
      os << prefix << "[" << section << "]\n";
      for (const auto& [key, value] : entries) os << prefix << key << " = " << value << "\n";
    }
    return os.str();
  }

 private:
  static double parse_real(const std::string& raw, const std::string& section, const std::string& key) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(raw, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != raw.size() || raw.empty()) {
      throw ConfigError("[" + section + "] " + key + ": not a number: '" + raw + "'");
    }
    return v;
  }

  int checked_int(const std::string& section, const std::string& key) const {
    long long v = integer(section, key);
    if (v < -(1LL << 31) || v >= (1LL << 31)) {
      throw ConfigError("[" + section + "] " + key + ": out of range: '" + str(section, key) + "'");
    }
    return static_cast<int>(v);
  }

  static const std::map<std::string, std::map<std::string, std::string>>& defaults() {
    static const std::map<std::string, std::map<std::string, std::string>> table = {
        {"run",
         {{"seed", "7"},
          {"variant", "full"},
          {"transport", "mock"},
          {"split", "test"}}},
        {"data",
         {{"dir", ""},          // dataset directory (train/evaluate/ablate/grid-search)
          {"embeddings", ""},   // document embedding matrix (build-dataset)
          {"docs", ""},         // document table `doc_id\tday_index` (build-dataset)
          {"doc_events", ""},   // per-document events `doc_id\ts\tr\to` (build-dataset)
          {"vocab", ""},        // directory with entity2id.txt / relation2id.txt
          {"articles", ""},     // JSON-lines articles (extract)
          {"names", ""},        // entity names, one per line (link-entities)
          {"replay", ""},       // recorded transport responses (replay transport)
          {"checkpoint", ""}}}, // trained parameters (evaluate)
        {"model",
         {{"d", "32"},
          {"layers_local", "2"},
          {"layers_global", "2"},
          {"t_local", "5"},
          {"t_global", "5"},
          {"slope", "auto"},
          {"sample_slope", "false"},
          {"channels", "32"},
          {"kernel", "3"}}},
        {"train",
         {{"lr", "0.001"},
          {"weight_decay", "0"},
          {"epochs", "30"},
          {"patience", "5"}}},
        {"cluster",
         {{"lambda", "1"},
          {"min_cluster_size", "10"},
          {"reduced_dim", "200"},
          {"h_a", "112"},
          {"h_t", "78"},
          {"min_days", "2"},
          {"min_events", "10"},
          {"val_years", "1"},
          {"test_years", "1"},
          {"year_days", "365"},
          {"epoch", "1970-01-01"}}},
        {"extract",
         {{"http_host", "localhost"},
          {"http_port", "8080"},
          {"http_path", "/v1/chat/completions"},
          {"http_model", "default"},
          {"api_key_env", "LOGO_API_KEY"},
          {"timeout_seconds", "60"},
          {"max_retries", "3"},
          {"link_k", "32"},
          {"link_rounds", "2"},
          {"embed_dim", "256"}}},
        {"grid",
         {{"lr", "0.01,0.001,0.0001"},
          {"weight_decay", "0.0001,0.00001,0.000001,0.0000001"}}},
    };
    return table;
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace logo
