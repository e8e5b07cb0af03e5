#pragma once
// File formats for datasets:
//   train/val/test/outliers.tsv  one `s\tr\to\tt\tc` quintuple per line
//   entity2id.txt, relation2id.txt  `name\tid` lines, dense ids
//   relation_hierarchy.txt  `child_id\tparent_id` lines (optional)
//   meta.json  epoch date, counts, t_max, split membership

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "logo/errors.hpp"
#include "logo/events.hpp"

namespace logo {

namespace io_detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline int parse_int(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw MalformedLine(where + ": not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw MalformedLine(where + ": trailing junk in '" + s + "'");
  return v;
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace io_detail

inline std::vector<AtomicEvent> load_quintuples(const std::string& path, const Vocab& vocab) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open quintuple file: " + path);
  std::vector<AtomicEvent> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    auto fields = io_detail::split_tabs(line);
    if (fields.size() != 5) {
      throw MalformedLine(where + ": expected 5 tab-separated fields, got " +
                          std::to_string(fields.size()));
    }
    AtomicEvent e;
    e.subject = io_detail::parse_int(fields[0], where);
    e.relation = io_detail::parse_int(fields[1], where);
    e.object = io_detail::parse_int(fields[2], where);
    e.time = io_detail::parse_int(fields[3], where);
    int c = io_detail::parse_int(fields[4], where);
    if (c < CeTag::kFileSentinel) throw MalformedLine(where + ": bad ce id " + fields[4]);
    e.ce = CeTag::from_file(c);
    if (e.subject < 0 || e.subject >= vocab.entity_count() || e.object < 0 ||
        e.object >= vocab.entity_count()) {
      throw UnknownId(where + ": entity id out of vocab range");
    }
    if (e.relation < 0 || e.relation >= 2 * vocab.relation_count()) {
      throw UnknownId(where + ": relation id out of vocab range");
    }
    out.push_back(e);
  }
  return out;
}

inline void save_quintuples(const std::string& path, const std::vector<AtomicEvent>& events) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write quintuple file: " + path);
  for (const AtomicEvent& e : events) {
    os << e.subject << '\t' << e.relation << '\t' << e.object << '\t' << e.time << '\t'
       << e.ce.file_value() << '\n';
  }
}

// `name\tid` per line; ids must be dense 0..N-1 but may appear in any order.
inline void load_id_map(const std::string& path, std::vector<std::string>& names) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open id map: " + path);
  std::vector<std::pair<std::string, int>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    auto fields = io_detail::split_tabs(line);
    if (fields.size() != 2) throw MalformedLine(where + ": expected `name\\tid`");
    rows.emplace_back(fields[0], io_detail::parse_int(fields[1], where));
  }
  names.assign(rows.size(), "");
  for (auto& [name, id] : rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= names.size() || !names[static_cast<std::size_t>(id)].empty()) {
      throw MalformedLine(path + ": ids not dense 0.." + std::to_string(rows.size() - 1));
    }
    names[static_cast<std::size_t>(id)] = std::move(name);
  }
}

inline Vocab load_vocab(const std::string& dir) {
  namespace fs = std::filesystem;
  Vocab v;
  std::vector<std::string> entities, relations;
  load_id_map((fs::path(dir) / "entity2id.txt").string(), entities);
  load_id_map((fs::path(dir) / "relation2id.txt").string(), relations);
  for (const std::string& e : entities) v.add_entity(e);
  for (const std::string& r : relations) v.add_relation(r);
  if (v.entity_count() != static_cast<int>(entities.size()) ||
      v.relation_count() != static_cast<int>(relations.size())) {
    throw MalformedLine(dir + ": duplicate names in id maps");
  }
  fs::path hier = fs::path(dir) / "relation_hierarchy.txt";
  if (fs::exists(hier)) {
    std::ifstream is(hier);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      line = io_detail::strip_cr(line);
      if (line.empty()) continue;
      std::string where = hier.string() + ":" + std::to_string(lineno);
      auto fields = io_detail::split_tabs(line);
      if (fields.size() != 2) throw MalformedLine(where + ": expected `child_id\\tparent_id`");
      v.set_parent(io_detail::parse_int(fields[0], where), io_detail::parse_int(fields[1], where));
    }
  }
  return v;
}

inline void save_vocab(const std::string& dir, const Vocab& v) {
  namespace fs = std::filesystem;
  {
    std::ofstream os(fs::path(dir) / "entity2id.txt");
    if (!os) throw IoError("cannot write entity2id.txt in " + dir);
    for (int i = 0; i < v.entity_count(); ++i) os << v.entity_name(i) << '\t' << i << '\n';
  }
  {
    std::ofstream os(fs::path(dir) / "relation2id.txt");
    if (!os) throw IoError("cannot write relation2id.txt in " + dir);
    for (int i = 0; i < v.relation_count(); ++i) os << v.relation_name(i) << '\t' << i << '\n';
  }
  bool any_parent = false;
  for (int r = 0; r < v.relation_count(); ++r) {
    if (v.parent(r) >= 0) any_parent = true;
  }
  if (any_parent) {
    std::ofstream os(fs::path(dir) / "relation_hierarchy.txt");
    if (!os) throw IoError("cannot write relation_hierarchy.txt in " + dir);
    for (int r = 0; r < v.relation_count(); ++r) {
      if (v.parent(r) >= 0) os << r << '\t' << v.parent(r) << '\n';
    }
  }
}

// Groups a flat event list into per-CE day snapshots; events keep file order
// within a day. Outlier events are rejected here (callers route them apart).
inline std::map<int, ComplexEvent> group_into_ces(const std::vector<AtomicEvent>& events) {
  std::map<int, std::map<int, std::vector<AtomicEvent>>> grouped;
  for (const AtomicEvent& e : events) {
    if (e.ce.is_outlier()) throw Error("group_into_ces: outlier event in CE list");
    grouped[e.ce.id()][e.time].push_back(e);
  }
  std::map<int, ComplexEvent> out;
  for (auto& [id, days] : grouped) {
    ComplexEvent ce;
    ce.id = id;
    for (auto& [day, evs] : days) {
      Snapshot s;
      s.ce = id;
      s.time = day;
      s.events = std::move(evs);
      ce.snapshots.push_back(std::move(s));
    }
    out.emplace(id, std::move(ce));
  }
  return out;
}

inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.vocab = load_vocab(dir);

  std::ifstream meta_in(fs::path(dir) / "meta.json");
  if (!meta_in) throw IoError("cannot open meta.json in " + dir);
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedLine(dir + "/meta.json: " + e.what());
  }
  ds.epoch = meta.at("epoch").get<std::string>();
  ds.t_max = meta.at("t_max").get<int>();
  if (meta.at("num_entities").get<int>() != ds.vocab.entity_count() ||
      meta.at("num_relations").get<int>() != ds.vocab.relation_count()) {
    throw MalformedLine(dir + "/meta.json: counts disagree with id maps");
  }

  std::vector<AtomicEvent> all;
  for (Split sp : {Split::train, Split::val, Split::test}) {
    std::string path = (fs::path(dir) / (std::string(split_name(sp)) + ".tsv")).string();
    auto events = load_quintuples(path, ds.vocab);
    all.insert(all.end(), events.begin(), events.end());
    std::set<int>& ids = ds.splits[sp];
    for (const AtomicEvent& e : events) {
      if (e.ce.is_outlier()) throw MalformedLine(path + ": outlier event in a split file");
      ids.insert(e.ce.id());
    }
    // cross-check against meta
    const auto& listed = meta.at("splits").at(split_name(sp));
    std::set<int> expect(listed.begin(), listed.end());
    if (expect != ids) throw MalformedLine(dir + "/meta.json: split `" + split_name(sp) +
                                           "` disagrees with " + path);
  }
  ds.ces = group_into_ces(all);

  fs::path outlier_path = fs::path(dir) / "outliers.tsv";
  if (fs::exists(outlier_path)) {
    ds.outliers = load_quintuples(outlier_path.string(), ds.vocab);
    for (const AtomicEvent& e : ds.outliers) {
      if (!e.ce.is_outlier()) throw MalformedLine(outlier_path.string() + ": tagged event");
    }
  }
  ds.validate();
  return ds;
}

inline void save_dataset(const std::string& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_vocab(dir, ds.vocab);
  for (Split sp : {Split::train, Split::val, Split::test}) {
    std::vector<AtomicEvent> events;
    for (int id : ds.split_ids(sp)) {
      const ComplexEvent& ce = ds.ces.at(id);
      for (const Snapshot& s : ce.snapshots) {
        events.insert(events.end(), s.events.begin(), s.events.end());
      }
    }
    save_quintuples((fs::path(dir) / (std::string(split_name(sp)) + ".tsv")).string(), events);
  }
  save_quintuples((fs::path(dir) / "outliers.tsv").string(), ds.outliers);

  nlohmann::json meta;
  meta["epoch"] = ds.epoch;
  meta["num_entities"] = ds.vocab.entity_count();
  meta["num_relations"] = ds.vocab.relation_count();
  meta["t_max"] = ds.t_max;
  for (Split sp : {Split::train, Split::val, Split::test}) {
    meta["splits"][split_name(sp)] = std::vector<int>(ds.split_ids(sp).begin(),
                                                      ds.split_ids(sp).end());
  }
  std::ofstream os(fs::path(dir) / "meta.json");
  if (!os) throw IoError("cannot write meta.json in " + dir);
  os << meta.dump(2) << '\n';
}

}  // namespace logo
