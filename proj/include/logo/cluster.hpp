// Complex-event identification: time-aware feature construction (principal
// components + a scaled day column), density clustering with outliers,
// greedy supercluster splitting, and filtering/chronological assembly of the
// final dataset splits.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "logo/errors.hpp"
#include "logo/events.hpp"
#include "logo/tensor.hpp"

namespace logo {

struct ClusterConfig {
  double lambda = 1.0;       // weight of the appended time column
  int min_cluster_size = 10; // smallest admissible cluster
  int reduced_dim = 200;     // principal components kept
  std::uint64_t seed = 0;    // reserved; the pipeline is fully deterministic

  void check() const {
    if (lambda < 0) throw ConfigError("cluster.lambda must be non-negative");
    if (min_cluster_size < 2) throw ConfigError("cluster.min_cluster_size must be at least 2");
    if (reduced_dim < 1) throw ConfigError("cluster.reduced_dim must be positive");
  }
};

struct SplitThresholds {
  int h_a = 112; // max atomic events per complex event
  int h_t = 78;  // max inclusive day span per complex event

  void check() const {
    if (h_a < 10) throw ConfigError("split.h_a must be at least 10");
    if (h_t < 2) throw ConfigError("split.h_t must be at least 2");
  }
};

struct AssemblyConfig {
  int min_days = 2;    // drop complex events spanning fewer days
  int min_events = 10; // drop complex events with fewer atomic events
  int val_years = 1;
  int test_years = 1;
  int year_days = 365;

  void check() const {
    if (min_days < 1) throw ConfigError("assembly.min_days must be positive");
    if (min_events < 1) throw ConfigError("assembly.min_events must be positive");
    if (val_years < 0 || test_years < 0) throw ConfigError("assembly.*_years must be non-negative");
    if (year_days < 1) throw ConfigError("assembly.year_days must be positive");
  }
};

namespace cluster_detail {

// Cyclic Jacobi eigensolver for a symmetric matrix. `a` (n*n row-major) is
// reduced to its diagonal (the eigenvalues); `v` receives eigenvectors in
// columns. Deterministic sweep order.
inline void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& v) {
  v.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto idx = [n](int r, int c) { return static_cast<std::size_t>(r) * n + c; };
  for (int sweep = 0; sweep < 120; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[idx(p, q)] * a[idx(p, q)];
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a[idx(p, q)];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[idx(p, p)], aqq = a[idx(q, q)];
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a[idx(k, p)], akq = a[idx(k, q)];
          a[idx(k, p)] = c * akp - s * akq;
          a[idx(k, q)] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a[idx(p, k)], aqk = a[idx(q, k)];
          a[idx(p, k)] = c * apk - s * aqk;
          a[idx(q, k)] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v[idx(k, p)], vkq = v[idx(k, q)];
          v[idx(k, p)] = c * vkp - s * vkq;
          v[idx(k, q)] = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace cluster_detail

// Projects x (N x D) onto its top out_dim principal components. Fully
// deterministic: covariance (or Gram, when cheaper) eigenvectors ordered by
// descending eigenvalue, each sign-fixed so its largest-magnitude coordinate
// is positive.
inline Tensor pca_project(const Tensor& x, int out_dim) {
  if (x.ndim() != 2) throw ShapeMismatch("pca_project expects a 2-D matrix, got " + Tensor::shape_string(x.shape()));
  const int n = static_cast<int>(x.extent(0));
  const int d = static_cast<int>(x.extent(1));
  if (n < 1) throw Error("pca_project: empty matrix");
  if (out_dim < 1) throw ConfigError("pca_project: out_dim must be positive");
  if (out_dim > d)
    throw DimensionTooLarge("pca_project: out_dim " + std::to_string(out_dim) + " exceeds input dimension " + std::to_string(d));

  // column-centered copy
  std::vector<double> xc(static_cast<std::size_t>(n) * d);
  for (int j = 0; j < d; ++j) {
    double mean = 0;
    for (int i = 0; i < n; ++i) mean += x.at2(i, j);
    mean /= n;
    for (int i = 0; i < n; ++i) xc[static_cast<std::size_t>(i) * d + j] = x.at2(i, j) - mean;
  }

  // loadings: out_dim column vectors of length d
  std::vector<std::vector<double>> loads;
  auto by_value_desc = [](const std::vector<double>& vals) {
    std::vector<int> order(vals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] > vals[b]; });
    return order;
  };

  if (d <= n) {
    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) {
        double xa = xc[static_cast<std::size_t>(i) * d + a];
        if (xa == 0) continue;
        for (int b = 0; b < d; ++b) cov[static_cast<std::size_t>(a) * d + b] += xa * xc[static_cast<std::size_t>(i) * d + b];
      }
    std::vector<double> vecs;
    cluster_detail::jacobi_eigen(cov, d, vecs);
    std::vector<double> vals(d);
    for (int i = 0; i < d; ++i) vals[i] = cov[static_cast<std::size_t>(i) * d + i];
    std::vector<int> order = by_value_desc(vals);
    for (int k = 0; k < out_dim; ++k) {
      int col = order[k];
      std::vector<double> v(d);
      for (int i = 0; i < d; ++i) v[i] = vecs[static_cast<std::size_t>(i) * d + col];
      loads.push_back(std::move(v));
    }
  } else {
    // Gram-matrix route for wide matrices: eigenvectors u of X Xᵀ give
    // loadings Xᵀ u (normalized).
    std::vector<double> gram(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double dot = 0;
        for (int a = 0; a < d; ++a) dot += xc[static_cast<std::size_t>(i) * d + a] * xc[static_cast<std::size_t>(j) * d + a];
        gram[static_cast<std::size_t>(i) * n + j] = dot;
        gram[static_cast<std::size_t>(j) * n + i] = dot;
      }
    std::vector<double> vecs;
    cluster_detail::jacobi_eigen(gram, n, vecs);
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = gram[static_cast<std::size_t>(i) * n + i];
    std::vector<int> order = by_value_desc(vals);
    for (int k = 0; k < out_dim; ++k) {
      std::vector<double> v(d, 0.0);
      if (k < n) {
        int col = order[k];
        for (int a = 0; a < d; ++a) {
          double acc = 0;
          for (int i = 0; i < n; ++i) acc += xc[static_cast<std::size_t>(i) * d + a] * vecs[static_cast<std::size_t>(i) * n + col];
          v[a] = acc;
        }
        double norm = 0;
        for (double e : v) norm += e * e;
        norm = std::sqrt(norm);
        if (norm > 1e-12)
          for (double& e : v) e /= norm;
        else
          std::fill(v.begin(), v.end(), 0.0);
      }
      loads.push_back(std::move(v));
    }
  }

  for (std::vector<double>& v : loads) {
    int arg = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0)
      for (double& e : v) e = -e;
  }

  Tensor y({static_cast<std::size_t>(n), static_cast<std::size_t>(out_dim)});
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < out_dim; ++k) {
      double acc = 0;
      for (int a = 0; a < d; ++a) acc += xc[static_cast<std::size_t>(i) * d + a] * loads[k][a];
      y.at2(i, k) = acc;
    }
  return y;
}

// Reduces embeddings to reduced_dim principal components and appends one
// column holding lambda * (raw day index).
inline Tensor time_aware_features(const Tensor& embeddings, const std::vector<int>& times, double lambda, int reduced_dim) {
  if (embeddings.ndim() != 2) throw ShapeMismatch("time_aware_features expects a 2-D embedding matrix");
  if (embeddings.extent(0) != times.size())
    throw ShapeMismatch("time_aware_features: " + std::to_string(embeddings.extent(0)) + " embedding rows vs " +
                        std::to_string(times.size()) + " timestamps");
  if (lambda < 0) throw ConfigError("time_aware_features: lambda must be non-negative");
  Tensor reduced = pca_project(embeddings, reduced_dim);
  const std::size_t n = reduced.extent(0);
  const std::size_t dp = reduced.extent(1);
  Tensor out({n, dp + 1});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dp; ++j) out.at2(i, j) = reduced.at2(i, j);
    out.at2(i, dp) = lambda * static_cast<double>(times[i]);
  }
  return out;
}

namespace cluster_detail {

constexpr int kNoise = -1;

inline double lambda_of(double dist) { return 1.0 / std::max(dist, 1e-12); }

struct Dendrogram {
  // internal node i (global id n_points + i) merges children at weight w
  std::vector<int> left, right;
  std::vector<double> weight;
  std::vector<int> size;  // leaves under the node
};

// points under a dendrogram node, ascending
inline void collect_points(const Dendrogram& dg, int n_points, int node, std::vector<int>& out) {
  std::vector<int> stack = {node};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    if (cur < n_points) {
      out.push_back(cur);
    } else {
      stack.push_back(dg.left[cur - n_points]);
      stack.push_back(dg.right[cur - n_points]);
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace cluster_detail

// Density clustering over the rows of `features` honoring min_cluster_size:
// mutual-reachability single linkage condensed by minimum cluster size, with
// excess-of-mass cluster selection. Returns one label per row; -1 marks
// outliers; cluster labels are dense 0..K-1 ordered by first member.
// Guarantees: every cluster has >= min_cluster_size members, and identical
// rows always share a label.
inline std::vector<int> cluster_documents(const Tensor& features, int min_cluster_size) {
  using namespace cluster_detail;
  if (features.ndim() != 2) throw ShapeMismatch("cluster_documents expects a 2-D feature matrix");
  if (min_cluster_size < 2) throw ConfigError("cluster_documents: min_cluster_size must be at least 2");
  const int n = static_cast<int>(features.extent(0));
  const int d = static_cast<int>(features.extent(1));
  if (n < 1) throw Error("cluster_documents: empty feature matrix");
  if (n < min_cluster_size) return std::vector<int>(n, kNoise);

  auto dist = [&](int a, int b) {
    double acc = 0;
    for (int j = 0; j < d; ++j) {
      double diff = features.at2(a, j) - features.at2(b, j);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };

  // core distance: distance to the min_cluster_size-th nearest point,
  // counting the point itself
  std::vector<double> core(n);
  {
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) row[j] = dist(i, j);
      std::nth_element(row.begin(), row.begin() + (min_cluster_size - 1), row.end());
      core[i] = row[min_cluster_size - 1];
    }
  }
  auto mreach = [&](int a, int b) { return std::max({core[a], core[b], dist(a, b)}); };

  // Prim minimum spanning tree over the complete mutual-reachability graph
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, -1);
  std::vector<bool> in_tree(n, false);
  struct Edge {
    int a, b;
    double w;
  };
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  in_tree[0] = true;
  for (int j = 1; j < n; ++j) {
    best[j] = mreach(0, j);
    best_from[j] = 0;
  }
  for (int step = 1; step < n; ++step) {
    int pick = -1;
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      if (pick == -1 || best[j] < best[pick]) pick = j;
    }
    edges.push_back({best_from[pick], pick, best[pick]});
    in_tree[pick] = true;
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      double w = mreach(pick, j);
      if (w < best[j]) {
        best[j] = w;
        best_from[j] = pick;
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.w != y.w) return x.w < y.w;
    int xa = std::min(x.a, x.b), xb = std::max(x.a, x.b);
    int ya = std::min(y.a, y.b), yb = std::max(y.a, y.b);
    return std::tie(xa, xb) < std::tie(ya, yb);
  });

  // single-linkage dendrogram via union-find
  Dendrogram dg;
  std::vector<int> uf(n), node_of(n);
  for (int i = 0; i < n; ++i) {
    uf[i] = i;
    node_of[i] = i;
  }
  std::function<int(int)> find = [&](int x) {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  };
  for (const Edge& e : edges) {
    int ra = find(e.a), rb = find(e.b);
    int na = node_of[ra], nb = node_of[rb];
    int sa = na < n ? 1 : dg.size[na - n];
    int sb = nb < n ? 1 : dg.size[nb - n];
    dg.left.push_back(na);
    dg.right.push_back(nb);
    dg.weight.push_back(e.w);
    dg.size.push_back(sa + sb);
    uf[ra] = rb;
    node_of[find(rb)] = n + static_cast<int>(dg.left.size()) - 1;
  }
  const int root = n + static_cast<int>(dg.left.size()) - 1;

  // condensed tree: walk the dendrogram, shedding sub-minimum branches as
  // point departures and recording true splits as child clusters
  std::vector<int> cparent = {-1};
  std::vector<double> cbirth = {0.0};
  std::vector<double> cstab = {0.0};
  std::vector<std::array<int, 2>> cchildren = {{-1, -1}};
  std::vector<int> point_cluster(n, 0);
  std::vector<std::pair<int, int>> stack = {{root, 0}};  // (dendrogram node, condensed id)
  while (!stack.empty()) {
    auto [node, cid] = stack.back();
    stack.pop_back();
    int cur = node;
    while (true) {
      // cur is internal: clusters hold >= min_cluster_size >= 2 points
      int li = dg.left[cur - n], ri = dg.right[cur - n];
      int ls = li < n ? 1 : dg.size[li - n];
      int rs = ri < n ? 1 : dg.size[ri - n];
      double lam = lambda_of(dg.weight[cur - n]);
      bool lbig = ls >= min_cluster_size, rbig = rs >= min_cluster_size;
      if (lbig && rbig) {
        for (int child : {li, ri}) {
          int new_id = static_cast<int>(cparent.size());
          cparent.push_back(cid);
          cbirth.push_back(lam);
          cstab.push_back(0.0);
          cchildren.push_back({-1, -1});
          if (cchildren[cid][0] == -1)
            cchildren[cid][0] = new_id;
          else
            cchildren[cid][1] = new_id;
          stack.push_back({child, new_id});
        }
        cstab[cid] += (ls + rs) * (lam - cbirth[cid]);
        break;
      }
      std::vector<int> shed;
      if (!lbig) collect_points(dg, n, li, shed);
      if (!rbig) collect_points(dg, n, ri, shed);
      for (int p : shed) {
        point_cluster[p] = cid;
        cstab[cid] += lam - cbirth[cid];
      }
      if (!lbig && !rbig) break;  // the cluster dissolved entirely
      cur = lbig ? li : ri;
    }
  }

  // excess-of-mass selection; the root is never selected
  const int nc = static_cast<int>(cparent.size());
  std::vector<bool> selected(nc, false);
  std::vector<double> subtree(nc, 0.0);
  for (int cid = nc - 1; cid >= 0; --cid) {
    if (cchildren[cid][0] == -1) {
      subtree[cid] = cstab[cid];
      selected[cid] = cid != 0;
      continue;
    }
    double child_sum = subtree[cchildren[cid][0]] + subtree[cchildren[cid][1]];
    if (cid != 0 && cstab[cid] >= child_sum) {
      selected[cid] = true;
      subtree[cid] = cstab[cid];
    } else {
      subtree[cid] = child_sum;
    }
  }
  // keep only the topmost selected cluster along each root path
  std::vector<bool> winner(nc, false);
  for (int cid = 1; cid < nc; ++cid) {
    bool shadowed = false;
    for (int a = cparent[cid]; a != -1; a = cparent[a])
      if (winner[a]) {
        shadowed = true;
        break;
      }
    winner[cid] = selected[cid] && !shadowed;
  }

  std::vector<int> labels(n, kNoise);
  for (int p = 0; p < n; ++p) {
    for (int c = point_cluster[p]; c != -1; c = cparent[c]) {
      if (winner[c]) {
        labels[p] = c;
        break;
      }
    }
  }

  // identical rows must agree: vote within each duplicate group
  {
    std::map<std::vector<double>, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) {
      std::vector<double> key(d);
      for (int j = 0; j < d; ++j) key[j] = features.at2(i, j);
      groups[std::move(key)].push_back(i);
    }
    for (const auto& [key, members] : groups) {
      if (members.size() < 2) continue;
      std::map<int, int> votes;
      for (int m : members) votes[labels[m]] += 1;
      int best_label = kNoise, best_count = -1;
      for (auto [label, count] : votes)
        if (count > best_count) {
          best_label = label;
          best_count = count;
        }
      for (int m : members) labels[m] = best_label;
    }
  }
  // dissolve clusters pushed below the minimum size
  {
    std::map<int, int> sizes;
    for (int l : labels)
      if (l != kNoise) sizes[l] += 1;
    for (int& l : labels)
      if (l != kNoise && sizes[l] < min_cluster_size) l = kNoise;
  }
  // dense relabel ordered by first member
  {
    std::map<int, int> remap;
    for (int i = 0; i < n; ++i) {
      if (labels[i] == kNoise) continue;
      if (!remap.count(labels[i])) remap[labels[i]] = static_cast<int>(remap.size());
    }
    for (int& l : labels)
      if (l != kNoise) l = remap[l];
  }
  return labels;
}

// Greedy chronological splitting of an oversized complex event: accumulate
// snapshots in time order and cut whenever the running event count reaches
// h_a or the inclusive day span reaches h_t. Cuts happen at day granularity
// only. Children carry ids parent*1000+k; a lone segment keeps the parent id.
// Accepts any positive thresholds so the rule itself can be probed below the
// production bounds that SplitThresholds::check() enforces on configs.
inline std::vector<ComplexEvent> split_supercluster(const ComplexEvent& ce, const SplitThresholds& th) {
  if (th.h_a < 1 || th.h_t < 1) throw ConfigError("split thresholds must be positive");
  std::vector<std::vector<Snapshot>> segments;
  std::vector<Snapshot> cur;
  std::size_t cur_events = 0;
  auto close = [&]() {
    segments.push_back(std::move(cur));
    cur.clear();
    cur_events = 0;
  };
  for (const Snapshot& snap : ce.snapshots) {
    if (!cur.empty() && snap.time - cur.front().time + 1 > th.h_t) close();
    cur.push_back(snap);
    cur_events += snap.events.size();
    if (cur_events >= static_cast<std::size_t>(th.h_a) || cur.back().time - cur.front().time + 1 >= th.h_t) close();
  }
  if (!cur.empty()) close();

  if (segments.size() == 1) return {ce};
  if (segments.size() > 1000) throw Error("split_supercluster: complex event " + std::to_string(ce.id) + " yields more than 1000 segments");
  std::vector<ComplexEvent> out;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    ComplexEvent child;
    child.id = ce.id * 1000 + static_cast<int>(k);
    child.snapshots = std::move(segments[k]);
    for (Snapshot& snap : child.snapshots) {
      snap.ce = child.id;
      for (AtomicEvent& ev : snap.events) ev.ce = CeTag::of(child.id);
    }
    out.push_back(std::move(child));
  }
  return out;
}

// Drops undersized complex events, assigns the survivors chronologically by
// mean event day (final test_years of the corpus span -> test, preceding
// val_years -> val, rest -> train), prunes val/test events whose entities or
// relations never occur in train, and renumbers ids densely.
inline Dataset filter_and_split(const std::vector<ComplexEvent>& ces, const Vocab& vocab, const AssemblyConfig& cfg) {
  cfg.check();
  if (ces.empty()) throw EmptyTrain("filter_and_split: no input complex events");

  int max_day = std::numeric_limits<int>::min();
  for (const ComplexEvent& ce : ces) {
    if (ce.snapshots.empty()) continue;
    max_day = std::max(max_day, ce.last_day());
  }
  if (max_day == std::numeric_limits<int>::min()) throw EmptyTrain("filter_and_split: no events in input");

  struct Kept {
    const ComplexEvent* ce;
    Split split;
  };
  std::vector<Kept> kept;
  const double test_cut = static_cast<double>(max_day) - static_cast<double>(cfg.test_years) * cfg.year_days;
  const double val_cut = test_cut - static_cast<double>(cfg.val_years) * cfg.year_days;
  for (const ComplexEvent& ce : ces) {
    if (ce.snapshots.empty()) continue;
    if (ce.span_days() < cfg.min_days) continue;
    if (ce.event_count() < static_cast<std::size_t>(cfg.min_events)) continue;
    double centroid = 0;
    std::size_t count = 0;
    for (const Snapshot& snap : ce.snapshots)
      for (const AtomicEvent& ev : snap.events) {
        centroid += ev.time;
        ++count;
      }
    centroid /= static_cast<double>(count);
    Split split = Split::train;
    if (centroid > test_cut)
      split = Split::test;
    else if (centroid > val_cut)
      split = Split::val;
    kept.push_back({&ce, split});
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) { return a.ce->id < b.ce->id; });

  bool any_train = false;
  for (const Kept& k : kept) any_train |= k.split == Split::train;
  if (!any_train) throw EmptyTrain("filter_and_split: no complex event falls in the train window");

  std::set<int> train_entities, train_relations;
  for (const Kept& k : kept) {
    if (k.split != Split::train) continue;
    for (const Snapshot& snap : k.ce->snapshots)
      for (const AtomicEvent& ev : snap.events) {
        train_entities.insert(ev.subject);
        train_entities.insert(ev.object);
        train_relations.insert(ev.relation);
      }
  }

  Dataset ds;
  ds.vocab = vocab;
  int next_id = 0;
  int t_max = 0;
  for (const Kept& k : kept) {
    ComplexEvent out;
    out.id = next_id;
    out.doc_ids = k.ce->doc_ids;
    for (const Snapshot& snap : k.ce->snapshots) {
      Snapshot pruned;
      pruned.ce = out.id;
      pruned.time = snap.time;
      for (const AtomicEvent& ev : snap.events) {
        if (k.split != Split::train) {
          if (!train_entities.count(ev.subject) || !train_entities.count(ev.object) || !train_relations.count(ev.relation)) continue;
        }
        AtomicEvent copy = ev;
        copy.ce = CeTag::of(out.id);
        pruned.events.push_back(copy);
      }
      if (!pruned.events.empty()) out.snapshots.push_back(std::move(pruned));
    }
    if (out.snapshots.empty()) continue;  // fully pruned by the cold-start rule
    t_max = std::max(t_max, out.last_day());
    ds.splits[k.split].insert(out.id);
    ds.ces.emplace(out.id, std::move(out));
    ++next_id;
  }
  ds.t_max = t_max;
  ds.validate();
  return ds;
}

}  // namespace logo
