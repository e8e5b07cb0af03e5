#pragma once
// Data model for temporal-event datasets: atomic events (s, r, o, t, c),
// complex events as chronologically ordered per-day snapshots, vocabularies
// with an optional 3-level relation hierarchy, snapshot indexing, and
// history-window extraction for local and global contexts.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logo/errors.hpp"

namespace logo {

// Complex-event membership tag. Events from documents assigned to no cluster
// are outliers; in files the sentinel is -1.
class CeTag {
 public:
  static constexpr int kFileSentinel = -1;

  CeTag() = default;

  static CeTag outlier() { return CeTag(); }

  static CeTag of(int id) {
    if (id < 0) throw Error("CeTag: negative ce id " + std::to_string(id));
    CeTag t;
    t.v_ = id;
    return t;
  }

  static CeTag from_file(int v) { return v == kFileSentinel ? outlier() : of(v); }

  bool is_outlier() const { return v_ == kFileSentinel; }

  int id() const {
    if (is_outlier()) throw Error("CeTag: outlier has no ce id");
    return v_;
  }

  int file_value() const { return v_; }

  friend bool operator==(CeTag a, CeTag b) { return a.v_ == b.v_; }
  friend bool operator!=(CeTag a, CeTag b) { return a.v_ != b.v_; }

 private:
  int v_ = kFileSentinel;
};

struct AtomicEvent {
  int subject = 0;
  int relation = 0;
  int object = 0;
  int time = 0;  // day index since the dataset epoch
  CeTag ce;

  friend bool operator==(const AtomicEvent& a, const AtomicEvent& b) {
    return a.subject == b.subject && a.relation == b.relation && a.object == b.object &&
           a.time == b.time && a.ce == b.ce;
  }
};

// One day's graph. `ce` is empty for a global snapshot (union over CEs plus
// outliers at that day).
struct Snapshot {
  std::optional<int> ce;
  int time = 0;
  std::vector<AtomicEvent> events;
};

struct ComplexEvent {
  int id = 0;
  std::vector<Snapshot> snapshots;  // strictly ascending time, each nonempty
  std::vector<std::string> doc_ids;

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const Snapshot& s : snapshots) n += s.events.size();
    return n;
  }

  int first_day() const { return snapshots.empty() ? 0 : snapshots.front().time; }
  int last_day() const { return snapshots.empty() ? 0 : snapshots.back().time; }

  // Inclusive day span; 0 for an empty CE.
  int span_days() const { return snapshots.empty() ? 0 : last_day() - first_day() + 1; }
};

// Entity/relation name<->id maps with dense ids and an optional relation
// hierarchy (up to 3 levels; parent links point toward the root).
class Vocab {
 public:
  int add_entity(const std::string& name) {
    auto [it, fresh] = entity_ids_.emplace(name, static_cast<int>(entity_names_.size()));
    if (fresh) entity_names_.push_back(name);
    return it->second;
  }

  int add_relation(const std::string& name) {
    auto [it, fresh] = relation_ids_.emplace(name, static_cast<int>(relation_names_.size()));
    if (fresh) {
      relation_names_.push_back(name);
      relation_parent_.push_back(-1);
    }
    return it->second;
  }

  int entity_count() const { return static_cast<int>(entity_names_.size()); }
  int relation_count() const { return static_cast<int>(relation_names_.size()); }

  const std::string& entity_name(int id) const { return entity_names_.at(static_cast<std::size_t>(id)); }
  const std::string& relation_name(int id) const { return relation_names_.at(static_cast<std::size_t>(id)); }

  std::optional<int> entity_id(const std::string& name) const {
    auto it = entity_ids_.find(name);
    return it == entity_ids_.end() ? std::nullopt : std::optional<int>(it->second);
  }

  std::optional<int> relation_id(const std::string& name) const {
    auto it = relation_ids_.find(name);
    return it == relation_ids_.end() ? std::nullopt : std::optional<int>(it->second);
  }

  void set_parent(int child, int parent) {
    if (child < 0 || child >= relation_count() || parent < 0 || parent >= relation_count()) {
      throw UnknownId("relation hierarchy: id out of range");
    }
    if (child == parent) throw Error("relation hierarchy: self-parent " + std::to_string(child));
    relation_parent_[static_cast<std::size_t>(child)] = parent;
    // walk up to catch cycles and depth > 3
    int depth = 1, cur = child;
    while (cur >= 0 && relation_parent_[static_cast<std::size_t>(cur)] >= 0) {
      cur = relation_parent_[static_cast<std::size_t>(cur)];
      if (++depth > 3) throw Error("relation hierarchy: depth exceeds 3 levels");
    }
  }

  // -1 when the relation is a top-level (level-1) type.
  int parent(int relation) const { return relation_parent_.at(static_cast<std::size_t>(relation)); }

  // 1 for root relations, up to 3.
  int level(int relation) const {
    int lvl = 1, cur = relation;
    while (parent(cur) >= 0) {
      cur = parent(cur);
      ++lvl;
    }
    return lvl;
  }

  std::vector<int> children(int relation) const {
    std::vector<int> out;
    for (int r = 0; r < relation_count(); ++r) {
      if (relation_parent_[static_cast<std::size_t>(r)] == relation) out.push_back(r);
    }
    return out;
  }

 private:
  std::vector<std::string> entity_names_, relation_names_;
  std::map<std::string, int> entity_ids_, relation_ids_;
  std::vector<int> relation_parent_;
};

enum class Split { train, val, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

struct Dataset {
  Vocab vocab;
  std::map<int, ComplexEvent> ces;
  std::vector<AtomicEvent> outliers;
  std::map<Split, std::set<int>> splits;
  std::string epoch = "1970-01-01";  // calendar date of day index 0
  int t_max = 0;

  const std::set<int>& split_ids(Split s) const {
    static const std::set<int> empty;
    auto it = splits.find(s);
    return it == splits.end() ? empty : it->second;
  }

  void validate() const {
    int ne = vocab.entity_count(), nr = vocab.relation_count();
    auto check_event = [&](const AtomicEvent& e, const char* where) {
      if (e.subject < 0 || e.subject >= ne || e.object < 0 || e.object >= ne) {
        throw UnknownId(std::string(where) + ": entity id out of range");
      }
      if (e.relation < 0 || e.relation >= 2 * nr) {
        throw UnknownId(std::string(where) + ": relation id out of range");
      }
      if (e.time < 0 || e.time > t_max) {
        throw Error(std::string(where) + ": time " + std::to_string(e.time) +
                    " outside [0, " + std::to_string(t_max) + "]");
      }
    };
    for (const auto& [id, ce] : ces) {
      if (ce.id != id) throw Error("dataset: ce map key/id mismatch");
      int prev = -1;
      for (const Snapshot& s : ce.snapshots) {
        if (s.events.empty()) throw Error("dataset: empty snapshot in ce " + std::to_string(id));
        if (s.time <= prev) throw Error("dataset: snapshots not strictly ascending in ce " +
                                        std::to_string(id));
        prev = s.time;
        if (!s.ce || *s.ce != id) throw Error("dataset: snapshot ce mismatch");
        for (const AtomicEvent& e : s.events) {
          check_event(e, "ce event");
          if (e.time != s.time || e.ce.is_outlier() || e.ce.id() != id) {
            throw Error("dataset: event/snapshot tag mismatch in ce " + std::to_string(id));
          }
        }
      }
    }
    for (const AtomicEvent& e : outliers) {
      check_event(e, "outlier");
      if (!e.ce.is_outlier()) throw Error("dataset: outlier list holds a tagged event");
    }
    std::set<int> seen;
    for (const auto& [sp, ids] : splits) {
      (void)sp;
      for (int id : ids) {
        if (!ces.count(id)) throw Error("dataset: split references unknown ce " + std::to_string(id));
        if (!seen.insert(id).second) throw Error("dataset: ce in two splits: " + std::to_string(id));
      }
    }
  }
};

struct Query {
  int subject = 0;
  int relation = 0;
  int time = 0;  // the t+1 being forecast
  int ce = 0;
  int gold_object = 0;
};

struct HistoryWindow {
  std::vector<const Snapshot*> snapshots;  // ascending, all strictly before the query time
  bool empty() const { return snapshots.empty(); }
  std::size_t size() const { return snapshots.size(); }
};

// Appends an inverse event (o, r+|R|, s, t, c) for every input event.
inline std::vector<AtomicEvent> add_inverse_relations(const std::vector<AtomicEvent>& events,
                                                      int n_relations) {
  for (const AtomicEvent& e : events) {
    if (e.relation >= n_relations) {
      throw AlreadyAugmented("add_inverse_relations: relation id " + std::to_string(e.relation) +
                             " >= |R| = " + std::to_string(n_relations));
    }
  }
  std::vector<AtomicEvent> out;
  out.reserve(events.size() * 2);
  out.insert(out.end(), events.begin(), events.end());
  for (const AtomicEvent& e : events) {
    AtomicEvent inv = e;
    inv.subject = e.object;
    inv.object = e.subject;
    inv.relation = e.relation + n_relations;
    out.push_back(inv);
  }
  return out;
}

// Per-CE timelines plus the global timeline (union of all CE events and all
// outlier events per day).
struct SnapshotIndex {
  std::map<int, std::vector<Snapshot>> per_ce;
  std::vector<Snapshot> global_timeline;
};

inline SnapshotIndex snapshot_index(const Dataset& ds) {
  SnapshotIndex idx;
  std::map<int, std::vector<AtomicEvent>> by_day;
  for (const auto& [id, ce] : ds.ces) {
    idx.per_ce[id] = ce.snapshots;
    for (const Snapshot& s : ce.snapshots) {
      auto& bucket = by_day[s.time];
      bucket.insert(bucket.end(), s.events.begin(), s.events.end());
    }
  }
  for (const AtomicEvent& e : ds.outliers) by_day[e.time].push_back(e);
  for (auto& [day, events] : by_day) {
    Snapshot g;
    g.ce = std::nullopt;
    g.time = day;
    g.events = std::move(events);
    idx.global_timeline.push_back(std::move(g));
  }
  return idx;
}

// Last min(T, available) snapshots strictly before query_time, ascending.
inline HistoryWindow history_window(const std::vector<Snapshot>& timeline, int query_time, int t_len) {
  if (t_len < 1) throw Error("history window: T must be >= 1");
  HistoryWindow w;
  auto it = std::lower_bound(timeline.begin(), timeline.end(), query_time,
                             [](const Snapshot& s, int t) { return s.time < t; });
  std::size_t end = static_cast<std::size_t>(it - timeline.begin());
  std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(t_len), end);
  for (std::size_t i = end - take; i < end; ++i) w.snapshots.push_back(&timeline[i]);
  return w;
}

inline HistoryWindow local_history(const ComplexEvent& ce, int query_time, int t_len) {
  return history_window(ce.snapshots, query_time, t_len);
}

inline HistoryWindow global_history(const std::vector<Snapshot>& global_timeline, int query_time,
                                    int t_len) {
  return history_window(global_timeline, query_time, t_len);
}

// All forecast queries of a split, grouped by (ce, day): every atomic event
// inside a CE snapshot becomes one query for its own day. Outliers never
// produce queries. Deterministic order: ce id ascending, then day ascending,
// then event order within the snapshot.
struct QueryGroup {
  int ce = 0;
  int time = 0;
  std::vector<Query> queries;
};

inline std::vector<QueryGroup> make_query_groups(const Dataset& ds, Split split) {
  std::vector<QueryGroup> out;
  for (int id : ds.split_ids(split)) {
    const ComplexEvent& ce = ds.ces.at(id);
    for (const Snapshot& s : ce.snapshots) {
      QueryGroup g;
      g.ce = id;
      g.time = s.time;
      for (const AtomicEvent& e : s.events) {
        g.queries.push_back(Query{e.subject, e.relation, e.time, id, e.object});
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace logo
