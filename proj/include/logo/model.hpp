#pragma once
// The LoGo forecaster. Two context branches (local = the query's own complex
// event, global = everything) encode entity tables by per-snapshot relational
// graph convolution followed by a GRU over the history window; branch outputs
// are fused by element-wise sum and scored against all candidate objects with
// a ConvTransE decoder. Variants: full, local-only, global-only, shared
// branch parameters, and late fusion (two decoders, summed post-decode).

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "logo/checkpoint.hpp"
#include "logo/errors.hpp"
#include "logo/events.hpp"
#include "logo/optim.hpp"
#include "logo/rng.hpp"
#include "logo/tape.hpp"

namespace logo {

inline constexpr double kDefaultSlope = (1.0 / 8.0 + 1.0 / 3.0) / 2.0;
inline constexpr double kSlopeLow = 1.0 / 8.0;
inline constexpr double kSlopeHigh = 1.0 / 3.0;

enum class Variant { full, local, global, share, late };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::local: return "local";
    case Variant::global: return "global";
    case Variant::share: return "share";
    case Variant::late: return "late";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::full, Variant::local, Variant::global, Variant::share, Variant::late}) {
    if (s == variant_name(v)) return v;
  }
  throw UnknownVariant("unknown variant: '" + s + "' (want full|local|global|share|late)");
}

struct ModelConfig {
  int d = 32;
  int layers_local = 2;
  int layers_global = 2;
  int t_local = 5;
  int t_global = 5;
  Variant variant = Variant::full;
  double slope = kDefaultSlope;
  bool sample_slope = false;  // draw slope uniformly from [1/8, 1/3] per training forward
  int channels = 32;
  int kernel = 3;

  void check() const {
    if (d < 1 || layers_local < 1 || layers_global < 1 || t_local < 1 || t_global < 1) {
      throw ConfigError("model config: d, layers, and history lengths must be >= 1");
    }
    if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("model config: slope must be in (0,1)");
    if (channels < 1) throw ConfigError("model config: channels must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("model config: kernel width must be odd");
  }
};

// ---- parameter structs ----

struct GruParams {
  Tensor wz, uz, bz, wr, ur, br, wh, uh, bh;
};

struct BranchParams {
  Tensor entity_table;            // |E|×d
  Tensor relation_table;          // |R|×d
  std::vector<std::pair<Tensor, Tensor>> rgcn;  // per layer (W1 d×d, W2 d×d)
  GruParams gru;
};

struct DecoderParams {
  Tensor kernels;     // C×2×k
  Tensor conv_bias;   // C
  Tensor projection;  // (C·d)×d
  Tensor proj_bias;   // d
};

struct ModelParams {
  ModelConfig cfg;
  int n_entities = 0;
  int n_relations = 0;
  std::optional<BranchParams> local, global_, shared;
  std::optional<DecoderParams> decoder, decoder2;

  static ModelParams init(const ModelConfig& cfg, int n_entities, int n_relations,
                          std::uint64_t seed);

  template <class Fn>
  void for_each_param(Fn&& fn);

  std::vector<std::pair<std::string, Tensor*>> named_params() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for_each_param([&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
    return out;
  }

  void save(const std::string& path) {
    std::vector<std::pair<std::string, const Tensor*>> items;
    for_each_param([&](const std::string& name, Tensor& t) { items.emplace_back(name, &t); });
    save_checkpoint(path, items);
  }

  // Loads tensors by name into an init()-shaped parameter set.
  static ModelParams load(const std::string& path, const ModelConfig& cfg, int n_entities,
                          int n_relations) {
    ModelParams p = init(cfg, n_entities, n_relations, 0);
    auto stored = load_checkpoint(path);
    std::size_t used = 0;
    p.for_each_param([&](const std::string& name, Tensor& t) {
      auto it = stored.find(name);
      if (it == stored.end()) throw IoError("checkpoint missing tensor: " + name);
      if (it->second.shape() != t.shape()) {
        throw IoError("checkpoint tensor " + name + " has shape " + it->second.shape_string() +
                      ", expected " + t.shape_string());
      }
      t = it->second;
      ++used;
    });
    if (used != stored.size()) throw IoError("checkpoint holds extra tensors for this config");
    return p;
  }
};

namespace model_detail {

inline GruParams init_gru(int d, std::uint64_t seed, const std::string& label) {
  std::size_t dd = static_cast<std::size_t>(d);
  GruParams g;
  g.wz = xavier_init({dd, dd}, derive_seed(seed, label + ".wz"));
  g.uz = xavier_init({dd, dd}, derive_seed(seed, label + ".uz"));
  g.bz = Tensor({dd});
  g.wr = xavier_init({dd, dd}, derive_seed(seed, label + ".wr"));
  g.ur = xavier_init({dd, dd}, derive_seed(seed, label + ".ur"));
  g.br = Tensor({dd});
  g.wh = xavier_init({dd, dd}, derive_seed(seed, label + ".wh"));
  g.uh = xavier_init({dd, dd}, derive_seed(seed, label + ".uh"));
  g.bh = Tensor({dd});
  return g;
}

inline BranchParams init_branch(const ModelConfig& cfg, int layers, int ne, int nr,
                                std::uint64_t seed, const std::string& label) {
  std::size_t d = static_cast<std::size_t>(cfg.d);
  BranchParams b;
  b.entity_table = xavier_init({static_cast<std::size_t>(ne), d},
                               derive_seed(seed, label + ".entity_table"));
  b.relation_table = xavier_init({static_cast<std::size_t>(nr), d},
                                 derive_seed(seed, label + ".relation_table"));
  for (int l = 0; l < layers; ++l) {
    std::string ll = label + ".rgcn." + std::to_string(l);
    b.rgcn.emplace_back(xavier_init({d, d}, derive_seed(seed, ll + ".w1")),
                        xavier_init({d, d}, derive_seed(seed, ll + ".w2")));
  }
  b.gru = init_gru(cfg.d, seed, label + ".gru");
  return b;
}

inline DecoderParams init_decoder(const ModelConfig& cfg, std::uint64_t seed,
                                  const std::string& label) {
  std::size_t d = static_cast<std::size_t>(cfg.d);
  std::size_t c = static_cast<std::size_t>(cfg.channels);
  std::size_t k = static_cast<std::size_t>(cfg.kernel);
  DecoderParams p;
  p.kernels = xavier_init({c, 2, k}, derive_seed(seed, label + ".kernels"));
  p.conv_bias = Tensor({c});
  p.projection = xavier_init({c * d, d}, derive_seed(seed, label + ".projection"));
  p.proj_bias = Tensor({d});
  return p;
}

template <class Fn>
void visit_gru(GruParams& g, const std::string& label, Fn&& fn) {
  fn(label + ".wz", g.wz);
  fn(label + ".uz", g.uz);
  fn(label + ".bz", g.bz);
  fn(label + ".wr", g.wr);
  fn(label + ".ur", g.ur);
  fn(label + ".br", g.br);
  fn(label + ".wh", g.wh);
  fn(label + ".uh", g.uh);
  fn(label + ".bh", g.bh);
}

template <class Fn>
void visit_branch(BranchParams& b, const std::string& label, Fn&& fn) {
  fn(label + ".entity_table", b.entity_table);
  fn(label + ".relation_table", b.relation_table);
  for (std::size_t l = 0; l < b.rgcn.size(); ++l) {
    fn(label + ".rgcn." + std::to_string(l) + ".w1", b.rgcn[l].first);
    fn(label + ".rgcn." + std::to_string(l) + ".w2", b.rgcn[l].second);
  }
  visit_gru(b.gru, label + ".gru", fn);
}

template <class Fn>
void visit_decoder(DecoderParams& p, const std::string& label, Fn&& fn) {
  fn(label + ".kernels", p.kernels);
  fn(label + ".conv_bias", p.conv_bias);
  fn(label + ".projection", p.projection);
  fn(label + ".proj_bias", p.proj_bias);
}

}  // namespace model_detail

inline ModelParams ModelParams::init(const ModelConfig& cfg, int n_entities, int n_relations,
                                     std::uint64_t seed) {
  cfg.check();
  if (n_entities < 1 || n_relations < 1) throw ConfigError("model: empty vocabulary");
  ModelParams p;
  p.cfg = cfg;
  p.n_entities = n_entities;
  p.n_relations = n_relations;
  namespace md = model_detail;
  switch (cfg.variant) {
    case Variant::full:
    case Variant::late:
      p.local = md::init_branch(cfg, cfg.layers_local, n_entities, n_relations, seed, "local");
      p.global_ = md::init_branch(cfg, cfg.layers_global, n_entities, n_relations, seed, "global");
      break;
    case Variant::local:
      p.local = md::init_branch(cfg, cfg.layers_local, n_entities, n_relations, seed, "local");
      break;
    case Variant::global:
      p.global_ = md::init_branch(cfg, cfg.layers_global, n_entities, n_relations, seed, "global");
      break;
    case Variant::share:
      p.shared = md::init_branch(cfg, cfg.layers_local, n_entities, n_relations, seed, "shared");
      break;
  }
  p.decoder = md::init_decoder(cfg, seed, "decoder");
  if (cfg.variant == Variant::late) p.decoder2 = md::init_decoder(cfg, seed, "decoder2");
  return p;
}

template <class Fn>
void ModelParams::for_each_param(Fn&& fn) {
  namespace md = model_detail;
  if (local) md::visit_branch(*local, "local", fn);
  if (global_) md::visit_branch(*global_, "global", fn);
  if (shared) md::visit_branch(*shared, "shared", fn);
  if (decoder) md::visit_decoder(*decoder, "decoder", fn);
  if (decoder2) md::visit_decoder(*decoder2, "decoder2", fn);
}

// ---- tape-registered views ----

struct GruVars {
  Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};

struct BranchVars {
  Var entity, relation;
  std::vector<std::pair<Var, Var>> rgcn;
  GruVars gru;
};

struct DecoderVars {
  Var kernels, conv_bias, projection, proj_bias;
};

struct ModelVarSet {
  std::optional<BranchVars> local, global_, shared;
  std::optional<DecoderVars> decoder, decoder2;
  std::vector<std::pair<std::string, Var>> leaves;  // registration order

  std::map<std::string, Tensor> grads(const Tape& tape) const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, var] : leaves) out.emplace(name, tape.grad(var));
    return out;
  }
};

inline ModelVarSet push_params(Tape& tape, ModelParams& params, bool track) {
  ModelVarSet vs;
  namespace md = model_detail;
  auto reg = [&](const std::string& name, Tensor& t) {
    Var v = tape.leaf(t, track);
    vs.leaves.emplace_back(name, v);
    return v;
  };
  auto push_gru = [&](GruParams& g, const std::string& label) {
    GruVars gv;
    gv.wz = reg(label + ".wz", g.wz);
    gv.uz = reg(label + ".uz", g.uz);
    gv.bz = reg(label + ".bz", g.bz);
    gv.wr = reg(label + ".wr", g.wr);
    gv.ur = reg(label + ".ur", g.ur);
    gv.br = reg(label + ".br", g.br);
    gv.wh = reg(label + ".wh", g.wh);
    gv.uh = reg(label + ".uh", g.uh);
    gv.bh = reg(label + ".bh", g.bh);
    return gv;
  };
  auto push_branch = [&](BranchParams& b, const std::string& label) {
    BranchVars bv;
    bv.entity = reg(label + ".entity_table", b.entity_table);
    bv.relation = reg(label + ".relation_table", b.relation_table);
    for (std::size_t l = 0; l < b.rgcn.size(); ++l) {
      std::string ll = label + ".rgcn." + std::to_string(l);
      bv.rgcn.emplace_back(reg(ll + ".w1", b.rgcn[l].first), reg(ll + ".w2", b.rgcn[l].second));
    }
    bv.gru = push_gru(b.gru, label + ".gru");
    return bv;
  };
  auto push_decoder = [&](DecoderParams& p, const std::string& label) {
    DecoderVars dv;
    dv.kernels = reg(label + ".kernels", p.kernels);
    dv.conv_bias = reg(label + ".conv_bias", p.conv_bias);
    dv.projection = reg(label + ".projection", p.projection);
    dv.proj_bias = reg(label + ".proj_bias", p.proj_bias);
    return dv;
  };
  if (params.local) vs.local = push_branch(*params.local, "local");
  if (params.global_) vs.global_ = push_branch(*params.global_, "global");
  if (params.shared) vs.shared = push_branch(*params.shared, "shared");
  if (params.decoder) vs.decoder = push_decoder(*params.decoder, "decoder");
  if (params.decoder2) vs.decoder2 = push_decoder(*params.decoder2, "decoder2");
  return vs;
}

// ---- forward graph ----

// One relational graph-convolution pass over a snapshot:
//   msg(o)   = mean over events (s,r,o) of W1(e_s + r)
//   out[o]   = f(msg(o) + W2·e_in[o])
// Entities receiving no event keep only the self term. The neighbor mean is
// normalized by in-degree; the self term is not.
inline Var rgcn_layer(Tape& tape, const Snapshot& snap, Var e_in, Var r_table, Var w1, Var w2,
                      double slope) {
  std::size_t ne = tape.value(e_in).extent(0);
  std::vector<int> subjects, relations, objects;
  subjects.reserve(snap.events.size());
  for (const AtomicEvent& e : snap.events) {
    subjects.push_back(e.subject);
    relations.push_back(e.relation);
    objects.push_back(e.object);
  }
  Var msg_in = tape.add(tape.gather_rows(e_in, subjects), tape.gather_rows(r_table, relations));
  Var transformed = tape.linear(msg_in, w1);
  Var pooled = tape.scatter_mean_rows(transformed, objects, ne);
  Var self = tape.linear(e_in, w2);
  return tape.leaky(tape.add(pooled, self), slope);
}

// Element-wise sum of the seed table and every layer output.
inline Var aggregate_layers(Tape& tape, const std::vector<Var>& layer_outputs, Var e0) {
  Var acc = e0;
  for (Var v : layer_outputs) acc = tape.add(acc, v);
  return acc;
}

// Standard GRU cell applied row-wise to the whole entity table.
inline Var gru_step(Tape& tape, Var x, Var h, const GruVars& g) {
  Var z = tape.sigmoid(tape.add_rowvec(tape.add(tape.linear(x, g.wz), tape.linear(h, g.uz)), g.bz));
  Var r = tape.sigmoid(tape.add_rowvec(tape.add(tape.linear(x, g.wr), tape.linear(h, g.ur)), g.br));
  Var htilde = tape.tanh_(
      tape.add_rowvec(tape.add(tape.linear(x, g.wh), tape.linear(tape.mul(r, h), g.uh)), g.bh));
  // (1−z)⊙h + z⊙h̃
  return tape.add(tape.sub(h, tape.mul(z, h)), tape.mul(z, htilde));
}

// Rolls the branch over the history window. Returns the evolved entity table
// and the (static) relation table; an empty window returns the tables as-is.
inline std::pair<Var, Var> encode_branch(Tape& tape, const HistoryWindow& window,
                                         const BranchVars& branch, double slope) {
  Var h = branch.entity;
  for (const Snapshot* snap : window.snapshots) {
    std::vector<Var> outs;
    Var cur = h;
    for (const auto& [w1, w2] : branch.rgcn) {
      cur = rgcn_layer(tape, *snap, cur, branch.relation, w1, w2, slope);
      outs.push_back(cur);
    }
    Var x = aggregate_layers(tape, outs, h);
    h = gru_step(tape, x, h, branch.gru);
  }
  return {h, branch.relation};
}

// ConvTransE: stack each subject/relation row pair as a 2×d grid, run C
// same-padded width-k convolutions, flatten, project back to d.
inline Var decode_convtranse(Tape& tape, Var subj_rows, Var rel_rows, const DecoderVars& dec) {
  Var conv = tape.conv_pair_rows(subj_rows, rel_rows, dec.kernels, dec.conv_bias);
  return tape.add_rowvec(tape.matmul(conv, dec.projection), dec.proj_bias);
}

// Logits for one query group under the configured variant. Candidate scores
// are the decoded query vectors dotted against the fused entity table.
inline Var group_logits(Tape& tape, const ModelVarSet& vars, const ModelConfig& cfg,
                        const std::vector<Snapshot>& ce_timeline,
                        const std::vector<Snapshot>& global_timeline, const QueryGroup& group,
                        double slope) {
  if (group.queries.empty()) throw EmptyBatch("group_logits: no queries");
  std::vector<int> subjects, relations;
  for (const Query& q : group.queries) {
    subjects.push_back(q.subject);
    relations.push_back(q.relation);
  }
  HistoryWindow local_win = history_window(ce_timeline, group.time, cfg.t_local);
  HistoryWindow global_win = history_window(global_timeline, group.time, cfg.t_global);

  auto fused_score = [&](const BranchVars& lb, const BranchVars& gb) {
    auto [ec, rc] = encode_branch(tape, local_win, lb, slope);
    auto [eg, rg] = encode_branch(tape, global_win, gb, slope);
    Var subj = tape.add(tape.gather_rows(ec, subjects), tape.gather_rows(eg, subjects));
    Var rel = tape.add(tape.gather_rows(rc, relations), tape.gather_rows(rg, relations));
    Var table = tape.add(ec, eg);
    Var dec = decode_convtranse(tape, subj, rel, *vars.decoder);
    return tape.matmul_nt(dec, table);
  };

  switch (cfg.variant) {
    case Variant::full:
      return fused_score(*vars.local, *vars.global_);
    case Variant::share:
      return fused_score(*vars.shared, *vars.shared);
    case Variant::local: {
      auto [ec, rc] = encode_branch(tape, local_win, *vars.local, slope);
      Var dec = decode_convtranse(tape, tape.gather_rows(ec, subjects),
                                  tape.gather_rows(rc, relations), *vars.decoder);
      return tape.matmul_nt(dec, ec);
    }
    case Variant::global: {
      auto [eg, rg] = encode_branch(tape, global_win, *vars.global_, slope);
      Var dec = decode_convtranse(tape, tape.gather_rows(eg, subjects),
                                  tape.gather_rows(rg, relations), *vars.decoder);
      return tape.matmul_nt(dec, eg);
    }
    case Variant::late: {
      auto [ec, rc] = encode_branch(tape, local_win, *vars.local, slope);
      auto [eg, rg] = encode_branch(tape, global_win, *vars.global_, slope);
      Var dec_c = decode_convtranse(tape, tape.gather_rows(ec, subjects),
                                    tape.gather_rows(rc, relations), *vars.decoder);
      Var dec_g = decode_convtranse(tape, tape.gather_rows(eg, subjects),
                                    tape.gather_rows(rg, relations), *vars.decoder2);
      return tape.matmul_nt(tape.add(dec_c, dec_g), tape.add(ec, eg));
    }
  }
  throw UnknownVariant("group_logits: unhandled variant");
}

// Summed cross-entropy over the group's queries.
inline Var group_loss(Tape& tape, const ModelVarSet& vars, const ModelConfig& cfg,
                      const std::vector<Snapshot>& ce_timeline,
                      const std::vector<Snapshot>& global_timeline, const QueryGroup& group,
                      double slope) {
  Var logits = group_logits(tape, vars, cfg, ce_timeline, global_timeline, group, slope);
  std::vector<int> golds;
  for (const Query& q : group.queries) golds.push_back(q.gold_object);
  return tape.softmax_xent_sum(logits, golds);
}

// Forward-only probabilities for one group (no gradients).
inline Tensor group_probabilities(ModelParams& params, const std::vector<Snapshot>& ce_timeline,
                                  const std::vector<Snapshot>& global_timeline,
                                  const QueryGroup& group) {
  Tape tape;
  ModelVarSet vars = push_params(tape, params, false);
  Var logits = group_logits(tape, vars, params.cfg, ce_timeline, global_timeline, group,
                            params.cfg.slope);
  return softmax_rows(tape.value(logits));
}

}  // namespace logo
