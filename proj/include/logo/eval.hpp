#pragma once
// Time-aware filtered ranking and the MRR / HIT@{1,3,10} metric suite.
//
// Ranks use the optimistic tie rule: rank = 1 + count of strictly greater
// scores. The filter for a query removes every other object known to be true
// for the same (subject, relation) at exactly the same timestamp, collected
// across all splits. Metric reduction goes through an integer rank histogram,
// so results are independent of query order.

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "logo/errors.hpp"
#include "logo/events.hpp"
#include "logo/model.hpp"

namespace logo {

struct RankResult {
  Query query;
  int raw_rank = 0;
  int filtered_rank = 0;
};

struct MetricsReport {
  double mrr = 0, hit1 = 0, hit3 = 0, hit10 = 0;
  std::size_t n_queries = 0;
};

inline RankResult rank_with_filter(const std::vector<double>& scores, const Query& q,
                                   const std::set<int>& filter_ids) {
  int gold = q.gold_object;
  if (gold < 0 || static_cast<std::size_t>(gold) >= scores.size()) {
    throw Error("rank_with_filter: gold out of range");
  }
  if (filter_ids.count(gold)) {
    throw GoldFiltered("rank_with_filter: gold object " + std::to_string(gold) +
                       " is in the filter set");
  }
  double gs = scores[static_cast<std::size_t>(gold)];
  int raw = 1, filtered = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<int>(i) == gold || scores[i] <= gs) continue;
    ++raw;
    if (!filter_ids.count(static_cast<int>(i))) ++filtered;
  }
  return RankResult{q, raw, filtered};
}

// (s, r, t) → objects observed anywhere in the CE events of all splits.
class FilterIndex {
 public:
  explicit FilterIndex(const Dataset& ds) {
    for (const auto& [id, ce] : ds.ces) {
      (void)id;
      for (const Snapshot& s : ce.snapshots) {
        for (const AtomicEvent& e : s.events) {
          by_srt_[{e.subject, e.relation, e.time}].insert(e.object);
        }
      }
    }
  }

  // Other objects true for (s, r) at exactly the query's timestamp.
  std::set<int> filter_for(const Query& q) const {
    std::set<int> out;
    auto it = by_srt_.find({q.subject, q.relation, q.time});
    if (it == by_srt_.end()) return out;
    out = it->second;
    out.erase(q.gold_object);
    return out;
  }

 private:
  std::map<std::tuple<int, int, int>, std::set<int>> by_srt_;
};

// Order-independent reduction: counts per rank first, float math second.
inline MetricsReport metrics_from_ranks(const std::vector<RankResult>& ranks) {
  if (ranks.empty()) throw EmptySplit("metrics_from_ranks: no queries");
  std::map<int, std::size_t> histogram;
  for (const RankResult& r : ranks) histogram[r.filtered_rank] += 1;
  MetricsReport m;
  m.n_queries = ranks.size();
  double inv_sum = 0;
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  for (const auto& [rank, count] : histogram) {
    inv_sum += static_cast<double>(count) / static_cast<double>(rank);
    if (rank <= 1) h1 += count;
    if (rank <= 3) h3 += count;
    if (rank <= 10) h10 += count;
  }
  double n = static_cast<double>(m.n_queries);
  m.mrr = inv_sum / n;
  m.hit1 = static_cast<double>(h1) / n;
  m.hit3 = static_cast<double>(h3) / n;
  m.hit10 = static_cast<double>(h10) / n;
  return m;
}

// Scores every query of the split with the frozen model and ranks the gold
// object raw and filtered. Appends per-query results to `dump` when given.
inline MetricsReport evaluate_split(ModelParams& params, const Dataset& ds,
                                    const SnapshotIndex& idx, const FilterIndex& filter,
                                    Split split, std::vector<RankResult>* dump = nullptr) {
  auto groups = make_query_groups(ds, split);
  std::vector<RankResult> ranks;
  for (const QueryGroup& g : groups) {
    const std::vector<Snapshot>& ce_tl = idx.per_ce.at(g.ce);
    Tensor probs = group_probabilities(params, ce_tl, idx.global_timeline, g);
    for (std::size_t i = 0; i < g.queries.size(); ++i) {
      const Query& q = g.queries[i];
      std::vector<double> scores(probs.extent(1));
      for (std::size_t j = 0; j < scores.size(); ++j) scores[j] = probs.at2(i, j);
      ranks.push_back(rank_with_filter(scores, q, filter.filter_for(q)));
    }
  }
  if (dump) dump->insert(dump->end(), ranks.begin(), ranks.end());
  return metrics_from_ranks(ranks);
}

inline std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Aligned text table with the usual metric names.
inline std::string render_metrics(const MetricsReport& m) {
  std::ostringstream os;
  os << "MRR       HIT@1     HIT@3     HIT@10    queries\n";
  os << format_fraction(m.mrr) << "  " << format_fraction(m.hit1) << "  "
     << format_fraction(m.hit3) << "  " << format_fraction(m.hit10) << "  " << m.n_queries
     << "\n";
  return os.str();
}

// `s  r  gold  t  ce  raw  filtered` per line.
inline std::string render_rank_dump(const std::vector<RankResult>& ranks) {
  std::ostringstream os;
  for (const RankResult& r : ranks) {
    os << r.query.subject << '\t' << r.query.relation << '\t' << r.query.gold_object << '\t'
       << r.query.time << '\t' << r.query.ce << '\t' << r.raw_rank << '\t' << r.filtered_rank
       << '\n';
  }
  return os.str();
}

}  // namespace logo
