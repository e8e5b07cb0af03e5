#pragma once
// Dataset construction: document embeddings plus day indexes and
// per-document events go through time-aware clustering, supercluster
// splitting, and chronological assembly, and come out as an on-disk dataset
// with a document-to-cluster assignment table.
//
// On-disk inputs:
//   embeddings  binary matrix: u32 N, u32 D, then N*D little-endian f32
//               values in row-major order
//   docs        TSV `doc_id\tday_index`, one line per embedding row, same order
//   doc_events  TSV `doc_id\tsubject_id\trelation_id\tobject_id`
//   vocab       directory holding entity2id.txt / relation2id.txt
//               (and optionally relation_hierarchy.txt)

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "logo/cluster.hpp"
#include "logo/dataset_io.hpp"
#include "logo/errors.hpp"
#include "logo/events.hpp"
#include "logo/extraction.hpp"
#include "logo/tensor.hpp"

namespace logo {

static_assert(std::endian::native == std::endian::little,
              "embedding matrix IO assumes a little-endian host");

inline void save_embeddings(const std::string& path, const Tensor& m) {
  if (m.ndim() != 2) throw ShapeMismatch("save_embeddings expects a 2-D matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding matrix: " + path);
  std::uint32_t header[2] = {static_cast<std::uint32_t>(m.extent(0)),
                             static_cast<std::uint32_t>(m.extent(1))};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  for (std::size_t i = 0; i < m.size(); ++i) {
    float v = static_cast<float>(m[i]);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  if (!out) throw IoError("short write to embedding matrix: " + path);
}

inline Tensor load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding matrix: " + path);
  std::uint32_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in) throw MalformedLine(path + ": truncated header");
  std::size_t n = header[0], d = header[1];
  if (n == 0 || d == 0) throw MalformedLine(path + ": empty matrix");
  Tensor m({n, d});
  std::vector<float> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(d * sizeof(float)));
    if (!in) throw MalformedLine(path + ": truncated payload at row " + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) m.at2(i, j) = row[j];
  }
  char extra;
  if (in.read(&extra, 1)) throw MalformedLine(path + ": trailing bytes after the declared shape");
  return m;
}

struct DocTable {
  std::vector<std::string> ids;  // aligned with embedding matrix rows
  std::vector<int> days;
};

inline DocTable load_doc_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open document table: " + path);
  DocTable table;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    auto fields = io_detail::split_tabs(line);
    if (fields.size() != 2) throw MalformedLine(where + ": expected `doc_id\\tday_index`");
    if (fields[0].empty()) throw MalformedLine(where + ": empty doc id");
    if (!seen.insert(fields[0]).second) throw MalformedLine(where + ": duplicate doc id " + fields[0]);
    int day = io_detail::parse_int(fields[1], where);
    if (day < 0) throw MalformedLine(where + ": negative day index");
    table.ids.push_back(fields[0]);
    table.days.push_back(day);
  }
  if (table.ids.empty()) throw MalformedLine(path + ": no documents");
  return table;
}

// doc_id -> (subject, relation, object) triples, ids validated against the
// vocabulary. Documents may legitimately have no events; unknown doc ids are
// rejected against the given table.
inline std::map<std::string, std::vector<std::array<int, 3>>> load_doc_events(
    const std::string& path, const DocTable& docs, const Vocab& vocab) {
  std::set<std::string> known(docs.ids.begin(), docs.ids.end());
  std::ifstream in(path);
  if (!in) throw IoError("cannot open document events: " + path);
  std::map<std::string, std::vector<std::array<int, 3>>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    auto fields = io_detail::split_tabs(line);
    if (fields.size() != 4) throw MalformedLine(where + ": expected `doc_id\\ts\\tr\\to`");
    if (!known.count(fields[0])) throw UnknownId(where + ": doc id not in the document table: " + fields[0]);
    int s = io_detail::parse_int(fields[1], where);
    int r = io_detail::parse_int(fields[2], where);
    int o = io_detail::parse_int(fields[3], where);
    if (s < 0 || s >= vocab.entity_count() || o < 0 || o >= vocab.entity_count()) {
      throw UnknownId(where + ": entity id out of range");
    }
    if (r < 0 || r >= vocab.relation_count()) throw UnknownId(where + ": relation id out of range");
    out[fields[0]].push_back({s, r, o});
  }
  return out;
}

struct BuildInputs {
  std::string embeddings;
  std::string docs;
  std::string doc_events;
  std::string vocab_dir;
};

struct BuildStats {
  std::size_t n_docs = 0;
  int n_clusters = 0;
  std::size_t n_outlier_docs = 0;
  std::size_t n_outlier_events = 0;
  std::size_t ces_clustered = 0;  // clusters that contributed at least one event
  std::size_t ces_after_split = 0;
  std::size_t ces_kept = 0;
  std::map<Split, std::size_t> split_ces;
  std::map<Split, std::size_t> split_events;
};

// Runs the whole construction pipeline and writes the dataset plus
// clusters.tsv (`doc_id\tcluster_id`, -1 for outliers, input order) to
// out_dir. `epoch` is the calendar date of day index 0, recorded in the
// dataset metadata.
inline BuildStats build_dataset(const BuildInputs& in, const ClusterConfig& ccfg,
                                const SplitThresholds& th, const AssemblyConfig& acfg,
                                const std::string& epoch, const std::string& out_dir) {
  ccfg.check();
  acfg.check();

  Tensor emb = load_embeddings(in.embeddings);
  DocTable docs = load_doc_table(in.docs);
  if (docs.ids.size() != emb.extent(0)) {
    throw ShapeMismatch("build_dataset: " + std::to_string(emb.extent(0)) + " embedding rows vs " +
                        std::to_string(docs.ids.size()) + " document table lines");
  }
  Vocab vocab = load_vocab(in.vocab_dir);
  auto doc_events = load_doc_events(in.doc_events, docs, vocab);

  Tensor features = time_aware_features(emb, docs.days, ccfg.lambda, ccfg.reduced_dim);
  std::vector<int> labels = cluster_documents(features, ccfg.min_cluster_size);

  BuildStats stats;
  stats.n_docs = docs.ids.size();
  for (int l : labels) stats.n_clusters = std::max(stats.n_clusters, l + 1);

  // Stamp each document's events with its day and cluster.
  std::vector<AtomicEvent> clustered;
  std::vector<AtomicEvent> outliers;
  std::map<int, std::vector<std::string>> cluster_docs;
  for (std::size_t i = 0; i < docs.ids.size(); ++i) {
    auto it = doc_events.find(docs.ids[i]);
    if (labels[i] < 0) ++stats.n_outlier_docs;
    if (it == doc_events.end()) continue;
    for (const auto& [s, r, o] : it->second) {
      AtomicEvent ev{s, r, o, docs.days[i],
                     labels[i] < 0 ? CeTag::outlier() : CeTag::of(labels[i])};
      (labels[i] < 0 ? outliers : clustered).push_back(ev);
    }
    if (labels[i] >= 0) cluster_docs[labels[i]].push_back(docs.ids[i]);
  }
  stats.n_outlier_events = outliers.size();

  std::map<int, ComplexEvent> raw = group_into_ces(clustered);
  stats.ces_clustered = raw.size();

  std::vector<ComplexEvent> children;
  for (auto& [id, ce] : raw) {
    ce.doc_ids = cluster_docs[id];
    for (ComplexEvent& child : split_supercluster(ce, th)) {
      if (child.id != ce.id) {
        // A document's events all share its day, so each document falls
        // wholly inside one chronological child.
        child.doc_ids.clear();
        for (std::size_t i = 0; i < docs.ids.size(); ++i) {
          if (labels[i] == id && docs.days[i] >= child.first_day() &&
              docs.days[i] <= child.last_day() && doc_events.count(docs.ids[i])) {
            child.doc_ids.push_back(docs.ids[i]);
          }
        }
      }
      children.push_back(std::move(child));
    }
  }
  stats.ces_after_split = children.size();

  Dataset ds = filter_and_split(children, vocab, acfg);
  ds.epoch = epoch;
  ds.outliers = std::move(outliers);
  for (const AtomicEvent& ev : ds.outliers) ds.t_max = std::max(ds.t_max, ev.time);
  ds.validate();

  stats.ces_kept = ds.ces.size();
  for (Split sp : {Split::train, Split::val, Split::test}) {
    stats.split_ces[sp] = ds.split_ids(sp).size();
    std::size_t events = 0;
    for (int id : ds.split_ids(sp)) events += ds.ces.at(id).event_count();
    stats.split_events[sp] = events;
  }

  save_dataset(out_dir, ds);
  std::ofstream clusters(std::filesystem::path(out_dir) / "clusters.tsv");
  if (!clusters) throw IoError("cannot write clusters.tsv in " + out_dir);
  for (std::size_t i = 0; i < docs.ids.size(); ++i) {
    clusters << docs.ids[i] << '\t' << labels[i] << '\n';
  }
  return stats;
}

// JSON-lines articles: {"doc_id": ..., "date": day_index, "title": ...,
// "body": ...} per line.
inline std::vector<Article> load_articles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open articles file: " + path);
  std::vector<Article> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) throw MalformedLine(where + ": not a JSON object");
    Article a;
    try {
      a.doc_id = parsed.at("doc_id").get<std::string>();
      a.date = parsed.at("date").get<int>();
      a.title = parsed.at("title").get<std::string>();
      a.body = parsed.at("body").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw MalformedLine(where + ": " + e.what());
    }
    if (a.date < 0) throw MalformedLine(where + ": negative date");
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace logo
