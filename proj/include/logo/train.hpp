#pragma once
// Training loop: epoch passes over train query groups (one Adam step per
// group), per-epoch validation MRR, best-checkpoint tracking, and early
// stopping on a patience budget. Deterministic for a fixed seed.

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "logo/eval.hpp"
#include "logo/events.hpp"
#include "logo/model.hpp"
#include "logo/optim.hpp"
#include "logo/rng.hpp"

namespace logo {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 0.0;
  int epochs = 30;
  std::uint64_t seed = 7;
  int patience = 5;
};

struct EpochLog {
  int epoch = 0;        // 1-based
  double train_loss = 0;  // summed cross-entropy over the epoch's queries
  double val_mrr = 0;
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_mrr = 0;
};

inline TrainResult train(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                         std::ostream* progress = nullptr) {
  auto train_groups = make_query_groups(ds, Split::train);
  auto val_groups = make_query_groups(ds, Split::val);
  if (train_groups.empty()) throw EmptySplit("train: no training queries");
  if (val_groups.empty()) throw EmptySplit("train: no validation queries");

  ModelParams params = ModelParams::init(mcfg, ds.vocab.entity_count(), ds.vocab.relation_count(),
                                         derive_seed(tcfg.seed, "model.init"));
  SnapshotIndex idx = snapshot_index(ds);
  FilterIndex filter(ds);

  auto named = params.named_params();
  std::map<std::string, AdamState> adam;
  for (auto& [name, t] : named) adam.emplace(name, AdamState::for_shape(t->shape()));

  Rng shuffle_rng(derive_seed(tcfg.seed, "train.shuffle"));
  Rng slope_rng(derive_seed(tcfg.seed, "train.slope"));

  TrainResult result;
  result.params = params;
  int best_epoch = 0;
  double best_mrr = -1.0;

  std::vector<std::size_t> order(train_groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0;
    for (std::size_t gi : order) {
      const QueryGroup& group = train_groups[gi];
      double slope = mcfg.sample_slope ? slope_rng.uniform(kSlopeLow, kSlopeHigh) : mcfg.slope;
      Tape tape;
      ModelVarSet vars = push_params(tape, params, true);
      Var loss = group_loss(tape, vars, mcfg, idx.per_ce.at(group.ce), idx.global_timeline,
                            group, slope);
      double lv = tape.value(loss)[0];
      if (!std::isfinite(lv)) {
        throw NonFiniteLoss("train: non-finite loss at epoch " + std::to_string(epoch) +
                            ", ce " + std::to_string(group.ce) + ", t " +
                            std::to_string(group.time));
      }
      epoch_loss += lv;
      tape.backward(loss);
      auto grads = vars.grads(tape);
      for (auto& [name, t] : named) {
        adam_step(*t, grads.at(name), adam.at(name), tcfg.lr, tcfg.weight_decay);
      }
    }

    MetricsReport val = evaluate_split(params, ds, idx, filter, Split::val);
    result.log.push_back(EpochLog{epoch, epoch_loss, val.mrr});
    if (progress) {
      (*progress) << epoch << '\t' << format_fraction(epoch_loss) << '\t'
                  << format_fraction(val.mrr) << '\n';
      progress->flush();
    }
    if (val.mrr > best_mrr) {
      best_mrr = val.mrr;
      best_epoch = epoch;
      result.params = params;
    }
    if (epoch - best_epoch >= tcfg.patience) break;
  }

  result.best_epoch = best_epoch;
  result.best_val_mrr = best_mrr;
  return result;
}

}  // namespace logo
