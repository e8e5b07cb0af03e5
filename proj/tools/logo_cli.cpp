// Command-line driver for the temporal complex-event forecasting toolkit.
//
// Commands: build-dataset, extract, link-entities, train, evaluate, ablate,
// grid-search. Every command is reproducible from configuration plus seed
// alone; textual artifacts embed the resolved configuration (the output
// directory itself is never part of it) and contain no timestamps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "logo/build.hpp"
#include "logo/config.hpp"
#include "logo/dataset_io.hpp"
#include "logo/eval.hpp"
#include "logo/extraction.hpp"
#include "logo/model.hpp"
#include "logo/train.hpp"

namespace fs = std::filesystem;
using namespace logo;

namespace {

// Flags shared by every subcommand. Optional flags overlay config keys, so
// precedence flag > file > default holds uniformly.
struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<long long> seed;
  std::optional<std::string> variant;
  std::optional<std::string> transport;
  std::optional<std::string> data;
  std::optional<std::string> split;
  std::optional<std::string> checkpoint;
  std::optional<std::string> replay;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "INI configuration file");
  sub->add_option("--out", c.out_dir, "output directory (default: out)");
  sub->add_option("--seed", c.seed, "root seed, overrides [run] seed");
  sub->add_option("--variant", c.variant, "model variant, overrides [run] variant");
  sub->add_option("--transport", c.transport, "mock, replay, or http; overrides [run] transport");
  sub->add_option("--data", c.data, "dataset directory, overrides [data] dir");
  sub->add_option("--split", c.split, "train, val, or test; overrides [run] split");
  sub->add_option("--checkpoint", c.checkpoint, "trained parameters, overrides [data] checkpoint");
  sub->add_option("--replay", c.replay, "recorded responses, overrides [data] replay");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  if (c.seed) cfg.set("run", "seed", std::to_string(*c.seed));
  if (c.variant) cfg.set("run", "variant", *c.variant);
  if (c.transport) cfg.set("run", "transport", *c.transport);
  if (c.data) cfg.set("data", "dir", *c.data);
  if (c.split) cfg.set("run", "split", *c.split);
  if (c.checkpoint) cfg.set("data", "checkpoint", *c.checkpoint);
  if (c.replay) cfg.set("data", "replay", *c.replay);
  return cfg;
}

std::string required_path(const RunConfig& cfg, const std::string& section, const std::string& key,
                          const std::string& purpose) {
  const std::string& v = cfg.str(section, key);
  if (v.empty()) throw ConfigError("[" + section + "] " + key + ": required for " + purpose);
  return v;
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("short write to " + path.string());
}

// Full-precision decimal that parses back to the identical double.
std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::unique_ptr<LlmTransport> make_transport(const RunConfig& cfg) {
  const std::string& kind = cfg.str("run", "transport");
  if (kind == "mock") return std::make_unique<MockTransport>();
  if (kind == "replay") {
    return std::make_unique<ReplayTransport>(required_path(cfg, "data", "replay", "the replay transport"));
  }
  if (kind == "http") return std::make_unique<HttpTransport>(cfg.http_options());
  throw ConfigError("[run] transport: expected mock, replay, or http, got '" + kind + "'");
}

Dataset load_configured_dataset(const RunConfig& cfg) {
  return load_dataset(required_path(cfg, "data", "dir", "this command"));
}

// ---- commands ----

int cmd_build_dataset(const Common& c) {
  RunConfig cfg = resolve(c);
  BuildInputs in;
  in.embeddings = required_path(cfg, "data", "embeddings", "build-dataset");
  in.docs = required_path(cfg, "data", "docs", "build-dataset");
  in.doc_events = required_path(cfg, "data", "doc_events", "build-dataset");
  in.vocab_dir = required_path(cfg, "data", "vocab", "build-dataset");
  fs::create_directories(c.out_dir);
  BuildStats stats = build_dataset(in, cfg.cluster_config(), cfg.split_thresholds(),
                                   cfg.assembly_config(), cfg.str("cluster", "epoch"), c.out_dir);
  write_text(fs::path(c.out_dir) / "build_config.ini", cfg.render());

  std::cout << "documents            " << stats.n_docs << "\n"
            << "clusters             " << stats.n_clusters << "\n"
            << "outlier documents    " << stats.n_outlier_docs << "\n"
            << "outlier events       " << stats.n_outlier_events << "\n"
            << "complex events       " << stats.ces_clustered << " clustered, " << stats.ces_after_split
            << " after splitting, " << stats.ces_kept << " kept\n";
  for (Split sp : {Split::train, Split::val, Split::test}) {
    std::string name = split_name(sp);
    std::cout << name << std::string(21 - name.size(), ' ') << stats.split_ces.at(sp)
              << " complex events, " << stats.split_events.at(sp) << " events\n";
  }
  std::cout << "dataset written to " << c.out_dir << "\n";
  return 0;
}

int cmd_extract(const Common& c) {
  RunConfig cfg = resolve(c);
  std::vector<Article> articles = load_articles(required_path(cfg, "data", "articles", "extract"));
  std::unique_ptr<LlmTransport> transport = make_transport(cfg);

  RelationHierarchy hierarchy;
  if (!cfg.str("data", "vocab").empty()) {
    hierarchy = RelationHierarchy::from_vocab(load_vocab(cfg.str("data", "vocab")));
  } else {
    hierarchy = RelationHierarchy::defaults();
  }

  std::ostringstream tsv;
  tsv << cfg.render("# ");
  tsv << "doc_id\tsubject\trelation\tobject\tlevel\ttime\n";
  std::size_t total_events = 0;
  int warnings = 0, calls = 0;
  bool failed = false;
  std::string failure;
  for (const Article& a : articles) {
    ExtractionResult r = extract_hierarchical(a, hierarchy, *transport);
    warnings += r.warnings;
    calls += r.transport_calls;
    for (const ParsedEvent& ev : r.events) {
      tsv << a.doc_id << '\t' << ev.subject_text << '\t' << ev.relation_label << '\t'
          << ev.object_text << '\t' << ev.level << '\t' << ev.time << '\n';
      ++total_events;
    }
    if (r.transport_failed) {
      failed = true;
      failure = r.failure;
      break;  // stop calling; keep the partial artifact
    }
  }
  write_text(fs::path(c.out_dir) / "extracted_events.tsv", tsv.str());

  std::cout << "articles         " << articles.size() << "\n"
            << "events           " << total_events << "\n"
            << "parse warnings   " << warnings << "\n"
            << "transport calls  " << calls << "\n";
  if (failed) {
    std::cerr << "error: transport failed, partial results written: " << failure << "\n";
    return 1;
  }
  return 0;
}

int cmd_link_entities(const Common& c) {
  RunConfig cfg = resolve(c);
  std::string names_path = required_path(cfg, "data", "names", "link-entities");
  std::ifstream in(names_path);
  if (!in) throw IoError("cannot open names file: " + names_path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    line = io_detail::strip_cr(line);
    if (!line.empty()) names.push_back(line);
  }
  std::unique_ptr<LlmTransport> transport = make_transport(cfg);
  LinkResult r = link_entities(names, cfg.link_options(), *transport);

  nlohmann::json doc(r.map.canonical);  // std::map keeps keys sorted
  write_text(fs::path(c.out_dir) / "linkmap.json", doc.dump(2) + "\n");

  std::size_t merged = 0;
  for (const auto& [canon, aliases] : r.map.canonical) {
    (void)canon;
    if (aliases.size() > 1) merged += aliases.size();
  }
  std::cout << "names             " << names.size() << "\n"
            << "canonical names   " << r.map.canonical.size() << "\n"
            << "aliases merged    " << merged << "\n"
            << "transport calls   " << r.transport_calls << "\n"
            << "malformed batches " << r.malformed << "\n";
  return 0;
}

std::string train_log_text(const RunConfig& cfg, const TrainResult& r) {
  std::ostringstream os;
  os << cfg.render("# ");
  os << "epoch\ttrain_loss\tval_mrr\n";
  for (const EpochLog& e : r.log) {
    os << e.epoch << '\t' << exact(e.train_loss) << '\t' << exact(e.val_mrr) << '\n';
  }
  return os.str();
}

int cmd_train(const Common& c) {
  RunConfig cfg = resolve(c);
  Dataset ds = load_configured_dataset(cfg);
  std::cout << "epoch\ttrain_loss\tval_mrr\n";
  TrainResult r = train(ds, cfg.model_config(), cfg.train_config(), &std::cout);
  fs::create_directories(c.out_dir);
  r.params.save((fs::path(c.out_dir) / "best.ckpt").string());
  write_text(fs::path(c.out_dir) / "train_log.tsv", train_log_text(cfg, r));
  write_text(fs::path(c.out_dir) / "config.ini", cfg.render());
  std::cout << "best epoch " << r.best_epoch << ", val MRR " << format_fraction(r.best_val_mrr)
            << "\n";
  return 0;
}

int cmd_evaluate(const Common& c) {
  RunConfig cfg = resolve(c);
  Dataset ds = load_configured_dataset(cfg);
  ModelConfig mcfg = cfg.model_config();
  std::string ckpt = required_path(cfg, "data", "checkpoint", "evaluate");
  ModelParams params = ModelParams::load(ckpt, mcfg, ds.vocab.entity_count(),
                                         ds.vocab.relation_count());
  SnapshotIndex idx = snapshot_index(ds);
  FilterIndex filter(ds);
  Split split = cfg.eval_split();
  std::vector<RankResult> dump;
  MetricsReport m = evaluate_split(params, ds, idx, filter, split, &dump);

  std::ostringstream metrics;
  metrics << "split: " << split_name(split) << "\n" << render_metrics(m) << "\n";
  metrics << "resolved configuration:\n" << cfg.render("# ");
  write_text(fs::path(c.out_dir) / "metrics.txt", metrics.str());

  std::ostringstream per_query;
  per_query << cfg.render("# ");
  per_query << "subject\trelation\tgold\ttime\tce\traw_rank\tfiltered_rank\n";
  per_query << render_rank_dump(dump);
  write_text(fs::path(c.out_dir) / "per_query.tsv", per_query.str());

  std::cout << "split: " << split_name(split) << "\n" << render_metrics(m);
  return 0;
}

int cmd_ablate(const Common& c) {
  RunConfig cfg = resolve(c);
  Dataset ds = load_configured_dataset(cfg);
  TrainConfig tcfg = cfg.train_config();

  std::ostringstream tsv;
  tsv << cfg.render("# ");
  tsv << "variant\ttest_mrr\thit1\thit3\thit10\tbest_epoch\tbest_val_mrr\n";
  std::cout << "variant  test MRR  HIT@1     HIT@3     HIT@10\n";
  for (Variant v : {Variant::full, Variant::local, Variant::global, Variant::share, Variant::late}) {
    RunConfig vcfg = cfg;
    vcfg.set("run", "variant", variant_name(v));
    TrainResult r = train(ds, vcfg.model_config(), tcfg);
    SnapshotIndex idx = snapshot_index(ds);
    FilterIndex filter(ds);
    MetricsReport m = evaluate_split(r.params, ds, idx, filter, Split::test);
    tsv << variant_name(v) << '\t' << exact(m.mrr) << '\t' << exact(m.hit1) << '\t'
        << exact(m.hit3) << '\t' << exact(m.hit10) << '\t' << r.best_epoch << '\t'
        << exact(r.best_val_mrr) << '\n';
    std::cout << variant_name(v) << std::string(9 - std::string(variant_name(v)).size(), ' ')
              << format_fraction(m.mrr) << "  " << format_fraction(m.hit1) << "  "
              << format_fraction(m.hit3) << "  " << format_fraction(m.hit10) << "\n";
  }
  write_text(fs::path(c.out_dir) / "ablation.tsv", tsv.str());
  return 0;
}

int cmd_grid_search(const Common& c) {
  RunConfig cfg = resolve(c);
  Dataset ds = load_configured_dataset(cfg);
  ModelConfig mcfg = cfg.model_config();
  std::vector<double> lrs = cfg.real_list("grid", "lr");
  std::vector<double> wds = cfg.real_list("grid", "weight_decay");

  struct Row {
    double lr, wd, mrr;
    int best_epoch;
  };
  std::vector<Row> rows;
  for (double lr : lrs) {
    for (double wd : wds) {
      TrainConfig tcfg = cfg.train_config();
      tcfg.lr = lr;
      tcfg.weight_decay = wd;
      TrainResult r = train(ds, mcfg, tcfg);
      rows.push_back(Row{lr, wd, r.best_val_mrr, r.best_epoch});
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mrr > rows[best].mrr) best = i;
  }

  std::ostringstream tsv;
  tsv << cfg.render("# ");
  tsv << "lr\tweight_decay\tbest_val_mrr\tbest_epoch\tbest\n";
  std::cout << "lr          weight_decay  val MRR   best epoch\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    tsv << exact(rows[i].lr) << '\t' << exact(rows[i].wd) << '\t' << exact(rows[i].mrr) << '\t'
        << rows[i].best_epoch << '\t' << (i == best ? "*" : "") << '\n';
    char line[128];
    std::snprintf(line, sizeof line, "%-11g %-13g %.6f  %d%s", rows[i].lr, rows[i].wd, rows[i].mrr,
                  rows[i].best_epoch, i == best ? "  <- best" : "");
    std::cout << line << "\n";
  }
  write_text(fs::path(c.out_dir) / "grid.tsv", tsv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal complex-event forecasting toolkit"};
  app.require_subcommand(1);

  std::map<std::string, Common> common;
  std::map<std::string, int (*)(const Common&)> handlers = {
      {"build-dataset", cmd_build_dataset}, {"extract", cmd_extract},
      {"link-entities", cmd_link_entities}, {"train", cmd_train},
      {"evaluate", cmd_evaluate},           {"ablate", cmd_ablate},
      {"grid-search", cmd_grid_search},
  };
  const std::map<std::string, std::string> blurbs = {
      {"build-dataset", "cluster documents into complex events and write a dataset"},
      {"extract", "hierarchical event extraction from articles"},
      {"link-entities", "merge aliases of the same entity"},
      {"train", "train the forecaster, saving the best-validation parameters"},
      {"evaluate", "time-aware filtered ranking metrics for a checkpoint"},
      {"ablate", "train and test every model variant"},
      {"grid-search", "train over the configured lr/weight-decay grid"},
  };
  for (auto& [name, fn] : handlers) {
    (void)fn;
    CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
    add_common(sub, common[name]);
  }

  CLI11_PARSE(app, argc, argv);

  std::string chosen = app.get_subcommands().front()->get_name();
  try {
    return handlers.at(chosen)(common.at(chosen));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
