// Hierarchical three-level event extraction against a pluggable language-
// model transport: prompt construction, lenient response parsing, entity
// linking via K-means-batched merge prompts, and LLM-judged precision.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "logo/errors.hpp"
#include "logo/events.hpp"
#include "logo/rng.hpp"
#include "logo/tensor.hpp"

namespace logo {

// ---------------------------------------------------------------------------
// domain types

struct Article {
  std::string doc_id;
  int date = 0;  // day index; stamped onto extracted events
  std::string title;
  std::string body;
};

struct ParsedEvent {
  std::string subject_text;
  std::string relation_label;
  std::string object_text;
  int level = 1;  // granularity of the final relation: 1, 2, or 3
  int time = 0;

  bool operator==(const ParsedEvent&) const = default;
};

// Name-keyed relation tree used for prompting (at most three levels).
struct RelationHierarchy {
  std::vector<std::string> level1;
  std::map<std::string, std::vector<std::string>> children;

  const std::vector<std::string>* children_of(const std::string& relation) const {
    auto it = children.find(relation);
    if (it == children.end() || it->second.empty()) return nullptr;
    return &it->second;
  }

  static RelationHierarchy from_vocab(const Vocab& vocab) {
    RelationHierarchy h;
    for (int r = 0; r < vocab.relation_count(); ++r) {
      if (vocab.parent(r) < 0)
        h.level1.push_back(vocab.relation_name(r));
      else
        h.children[vocab.relation_name(vocab.parent(r))].push_back(vocab.relation_name(r));
    }
    return h;
  }

  static RelationHierarchy defaults();
};

// ---------------------------------------------------------------------------
// transports

class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  virtual std::string send(const std::string& prompt) = 0;
};

// Deterministic canned transport: first substring rule that matches the
// prompt wins; otherwise the fallback response is returned.
class MockTransport final : public LlmTransport {
 public:
  MockTransport() = default;
  explicit MockTransport(std::string fallback) : fallback_(std::move(fallback)) {}

  void respond_with(const std::string& prompt_substring, const std::string& response) {
    rules_.emplace_back(prompt_substring, response);
  }
  std::string send(const std::string& prompt) override {
    prompts_.push_back(prompt);
    for (const auto& [needle, response] : rules_) {
      if (prompt.find(needle) != std::string::npos) return response;
    }
    return fallback_;
  }
  const std::vector<std::string>& prompts() const { return prompts_; }
  std::size_t call_count() const { return prompts_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> rules_;
  std::string fallback_;
  std::vector<std::string> prompts_;
};

// 16-hex-digit digest used to key recorded responses.
inline std::string replay_hash(const std::string& prompt) {
  std::uint64_t h = fnv1a64(prompt);
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

inline void append_replay_entry(const std::string& path, const std::string& prompt, const std::string& response) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open replay file for append: " + path);
  nlohmann::json line = {{"prompt_hash", replay_hash(prompt)}, {"response", response}};
  out << line.dump() << "\n";
}

// Replays recorded responses from a JSON-lines file of
// {"prompt_hash": ..., "response": ...} entries.
class ReplayTransport final : public LlmTransport {
 public:
  explicit ReplayTransport(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open replay file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("prompt_hash") || !parsed.contains("response") ||
          !parsed["prompt_hash"].is_string() || !parsed["response"].is_string()) {
        throw MalformedLine(path + ":" + std::to_string(line_no) + ": bad replay entry");
      }
      by_hash_[parsed["prompt_hash"].get<std::string>()] = parsed["response"].get<std::string>();
    }
  }

  std::string send(const std::string& prompt) override {
    auto it = by_hash_.find(replay_hash(prompt));
    if (it == by_hash_.end()) throw TransportFailure("no recorded response for prompt hash " + replay_hash(prompt));
    return it->second;
  }

 private:
  std::map<std::string, std::string> by_hash_;
};

struct HttpOptions {
  std::string host = "localhost";
  int port = 8080;
  std::string path = "/v1/chat/completions";
  std::string model = "default";
  std::string api_key_env = "LOGO_API_KEY";  // name of the env var holding the credential
  int timeout_seconds = 60;
  int max_retries = 3;
};

// Minimal JSON chat endpoint: posts {model, messages:[{role,content}]} and
// expects {content}. Requests are sequential (well under the in-flight
// bound); every attempt enforces the timeout, and the credential is read
// from the named environment variable at call time and never persisted.
class HttpTransport final : public LlmTransport {
 public:
  explicit HttpTransport(HttpOptions opt) : opt_(std::move(opt)) {}

  std::string send(const std::string& prompt) override {
    nlohmann::json request = {{"model", opt_.model}, {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    std::string body = request.dump();
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < opt_.max_retries; ++attempt) {
      httplib::Client client(opt_.host, opt_.port);
      client.set_connection_timeout(opt_.timeout_seconds, 0);
      client.set_read_timeout(opt_.timeout_seconds, 0);
      client.set_write_timeout(opt_.timeout_seconds, 0);
      httplib::Headers headers;
      if (const char* key = std::getenv(opt_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
      httplib::Result res = client.Post(opt_.path, headers, body, "application/json");
      if (!res) {
        last_error = "connection error";
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("content") || !parsed["content"].is_string()) {
        last_error = "malformed response body";
        continue;
      }
      return parsed["content"].get<std::string>();
    }
    throw TransportFailure("http transport failed after " + std::to_string(opt_.max_retries) + " attempts: " + last_error);
  }

 private:
  HttpOptions opt_;
};

// ---------------------------------------------------------------------------
// prompt construction

namespace extraction_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// title plus the first `max_paragraphs` nonempty body lines
inline std::string truncate_article(const Article& article, int max_paragraphs = 3) {
  std::string text = article.title;
  int kept = 0;
  for (const std::string& raw : split(article.body, '\n')) {
    if (kept >= max_paragraphs) break;
    std::string para = trim(raw);
    if (para.empty()) continue;
    text += "\n" + para;
    ++kept;
  }
  return text;
}

inline std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace extraction_detail

inline const char* kNoSpecificLabel = "No specific";

inline RelationHierarchy RelationHierarchy::defaults() {
  RelationHierarchy h;
  h.level1 = {
      "Make public statement",
      "Make an appeal or request",
      "Express intent to cooperate",
      "Consult or meet",
      "Engage in diplomatic cooperation",
      "Engage in material cooperation",
      "Provide aid",
      "Yield or concede",
      "Investigate",
      "Demand or order",
      "Verbally disapprove",
      "Reject",
      "Threaten",
      "Engage in political dissent",
      "Exhibit military or police power",
      "Reduce relations",
      "Coerce",
      "Use unconventional violence including terrorist",
      "Use conventional military force",
      "Use unconventional mass force",
  };
  return h;
}

inline const char* kExtractionExampleArticle =
    "Egypt committed to boosting economic cooperation with Lebanon (MENAFN- Daily News Egypt) Egypt is committed to "
    "enforcing economic cooperation with Lebanon, President Abdel Fattah Al-Sisi said during his meeting with Lebanese "
    "parliamentary speaker Nabih Berri.";

inline const char* kExtractionExampleResult =
    "Egypt; Express intent to cooperate; Lebanon | Egypt president Abdel Fattah Al-Sisi; Consult or meet; Lebanese "
    "parliamentary speaker Nabih Berri | Lebanese parliamentary speaker Nabih Berri; Consult or meet; Egypt president "
    "Abdel Fattah Al-Sisi";

// Candidate relations offered at a given level: the full top-level list for
// level 1, or the parent's children plus the opt-out label for levels 2-3.
inline std::vector<std::string> candidate_relations(const RelationHierarchy& hierarchy, int level, const std::string& parent_relation) {
  if (level < 1 || level > 3) throw ConfigError("extraction level must be 1, 2, or 3");
  if (level == 1) return hierarchy.level1;
  if (parent_relation.empty()) throw MissingParent("levels 2-3 require a parent relation");
  const std::vector<std::string>* kids = hierarchy.children_of(parent_relation);
  if (!kids) throw NoChildren("relation '" + parent_relation + "' has no sub-level relations");
  std::vector<std::string> out = *kids;
  out.push_back(kNoSpecificLabel);
  return out;
}

inline std::string build_extraction_prompt(const Article& article, int level, const std::string& parent_relation,
                                           const RelationHierarchy& hierarchy) {
  using extraction_detail::join;
  std::vector<std::string> candidates = candidate_relations(hierarchy, level, parent_relation);
  std::ostringstream p;
  p << "You are an assistant to perform structured event extraction from news articles with following rules:\n\n";
  p << "[Rules:] 1. Extract each event in format: event actor 1; event relation; event actor 2.\n";
  p << "2. Only choose event relation from this relation candidate list: " << join(candidates, ", ") << ".\n";
  p << "3. Event actors are usually political actors, countries or international organizations.\n";
  p << "4. Only extract events that have happened or is happening, and not extract future events.\n\n";
  p << "[Example:] For example, given the example article:\n";
  p << kExtractionExampleArticle << "\n";
  p << "List all events by rules, the extraction result of the example is:\n";
  p << kExtractionExampleResult << "\n\n";
  p << "[News Article:] Now, given the query article:\n";
  p << extraction_detail::truncate_article(article) << "\n\n";
  p << "[Output:] List all events by rules, the extraction result of the query article is:\n";
  return p.str();
}

// ---------------------------------------------------------------------------
// response parsing

struct ParseResult {
  std::vector<ParsedEvent> events;
  int warnings = 0;
};

// Lenient "s; r; o | s; r; o" parser: segments with wrong arity, empty
// fields, or a relation outside candidates + the opt-out label are dropped
// and counted; never throws.
inline ParseResult parse_extraction(const std::string& response, int level, const std::vector<std::string>& candidates) {
  using extraction_detail::split;
  using extraction_detail::trim;
  std::set<std::string> allowed(candidates.begin(), candidates.end());
  allowed.insert(kNoSpecificLabel);
  ParseResult out;
  for (const std::string& raw_segment : split(response, '|')) {
    if (trim(raw_segment).empty()) continue;
    std::vector<std::string> parts = split(raw_segment, ';');
    if (parts.size() != 3) {
      ++out.warnings;
      continue;
    }
    ParsedEvent ev;
    ev.subject_text = trim(parts[0]);
    ev.relation_label = trim(parts[1]);
    ev.object_text = trim(parts[2]);
    ev.level = level;
    if (ev.subject_text.empty() || ev.object_text.empty() || !allowed.count(ev.relation_label)) {
      ++out.warnings;
      continue;
    }
    out.events.push_back(std::move(ev));
  }
  return out;
}

// ---------------------------------------------------------------------------
// hierarchical driver

struct ExtractionResult {
  std::vector<ParsedEvent> events;
  int warnings = 0;
  int transport_calls = 0;
  bool transport_failed = false;
  std::string failure;
};

// Level-1 extraction, then one refinement call per event while children
// exist; the opt-out label (or an unusable sub-level response) finalizes the
// event at its current relation. A transport failure stops further calls and
// returns the partial result with a report.
inline ExtractionResult extract_hierarchical(const Article& article, const RelationHierarchy& hierarchy, LlmTransport& transport) {
  ExtractionResult out;
  auto call = [&](int level, const std::string& parent) -> std::optional<std::string> {
    if (out.transport_failed) return std::nullopt;
    try {
      ++out.transport_calls;
      return transport.send(build_extraction_prompt(article, level, parent, hierarchy));
    } catch (const TransportFailure& e) {
      out.transport_failed = true;
      out.failure = e.what();
      return std::nullopt;
    }
  };

  std::optional<std::string> first = call(1, "");
  if (!first) return out;
  ParseResult level1 = parse_extraction(*first, 1, hierarchy.level1);
  out.warnings += level1.warnings;

  for (const ParsedEvent& base : level1.events) {
    if (base.relation_label == kNoSpecificLabel) continue;  // opt-out is meaningless at the root
    ParsedEvent ev = base;
    ev.time = article.date;
    for (int level = 2; level <= 3; ++level) {
      const std::vector<std::string>* kids = hierarchy.children_of(ev.relation_label);
      if (!kids) break;
      std::optional<std::string> response = call(level, ev.relation_label);
      if (!response) break;
      ParseResult parsed = parse_extraction(*response, level, *kids);
      out.warnings += parsed.warnings;
      const ParsedEvent* refined = nullptr;
      for (const ParsedEvent& cand : parsed.events) {
        if (cand.relation_label != kNoSpecificLabel) {
          refined = &cand;
          break;
        }
      }
      if (!refined) break;  // opt-out or unusable response: keep the prior level
      ev.relation_label = refined->relation_label;
      ev.level = level;
    }
    out.events.push_back(std::move(ev));
  }
  return out;
}

// ---------------------------------------------------------------------------
// entity linking

struct LinkMap {
  std::map<std::string, std::vector<std::string>> canonical;  // canonical -> sorted original aliases

  // identity for unknown names
  const std::string& resolve(const std::string& name) const {
    auto it = alias_to_canonical_.find(name);
    return it == alias_to_canonical_.end() ? name : it->second;
  }

  // later claims on an already-linked alias are ignored, keeping alias lists
  // disjoint
  void add(const std::string& canon, const std::string& alias) {
    if (alias_to_canonical_.count(alias)) return;
    alias_to_canonical_[alias] = canon;
    std::vector<std::string>& list = canonical[canon];
    list.insert(std::lower_bound(list.begin(), list.end(), alias), alias);
  }

 private:
  std::map<std::string, std::string> alias_to_canonical_;
};

// L2-normalized character-trigram hash embeddings of the padded names.
inline Tensor name_embeddings(const std::vector<std::string>& names, int dim = 256) {
  if (dim < 1) throw ConfigError("name_embeddings: dim must be positive");
  Tensor out({names.size(), static_cast<std::size_t>(dim)});
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::string padded = " ";
    for (char c : names[i]) padded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    padded += ' ';
    for (std::size_t k = 0; k + 3 <= padded.size(); ++k) {
      std::size_t bucket = fnv1a64(std::string_view(padded).substr(k, 3)) % static_cast<std::uint64_t>(dim);
      out.at2(i, bucket) += 1.0;
    }
    double norm = 0;
    for (int j = 0; j < dim; ++j) norm += out.at2(i, j) * out.at2(i, j);
    norm = std::sqrt(norm);
    if (norm > 0)
      for (int j = 0; j < dim; ++j) out.at2(i, j) /= norm;
  }
  return out;
}

// Deterministic Lloyd iteration: seeded distinct starting centers, nearest-
// center assignment with lowest-index tie-breaks, at most `iters` rounds,
// and empty clusters re-seeded from the point farthest from its center.
inline std::vector<int> kmeans_assign(const Tensor& x, int k, std::uint64_t seed, int iters = 25) {
  if (x.ndim() != 2) throw ShapeMismatch("kmeans_assign expects a 2-D matrix");
  const int n = static_cast<int>(x.extent(0));
  const int f = static_cast<int>(x.extent(1));
  if (k < 1) throw ConfigError("kmeans_assign: k must be positive");
  if (k > n) throw ConfigError("kmeans_assign: k " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<double>> centers(k, std::vector<double>(f));
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < f; ++j) centers[c][j] = x.at2(order[c], j);

  auto sq_dist = [&](int i, const std::vector<double>& center) {
    double acc = 0;
    for (int j = 0; j < f; ++j) {
      double d = x.at2(i, j) - center[j];
      acc += d * d;
    }
    return acc;
  };

  std::vector<int> assign(n, 0);
  for (int round = 0; round < iters; ++round) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(i, centers[0]);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(i, centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) counts[assign[i]] += 1;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int far = -1;
      double far_d = -1;
      for (int i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;  // don't orphan another cluster
        double d = sq_dist(i, centers[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;
      counts[assign[far]] -= 1;
      assign[far] = c;
      counts[c] = 1;
      changed = true;
    }
    for (int c = 0; c < k; ++c) std::fill(centers[c].begin(), centers[c].end(), 0.0);
    std::vector<int> fresh(k, 0);
    for (int i = 0; i < n; ++i) {
      fresh[assign[i]] += 1;
      for (int j = 0; j < f; ++j) centers[assign[i]][j] += x.at2(i, j);
    }
    for (int c = 0; c < k; ++c)
      if (fresh[c] > 0)
        for (int j = 0; j < f; ++j) centers[c][j] /= fresh[c];
    if (!changed) break;
  }
  return assign;
}

inline std::string build_linking_prompt(const std::vector<std::string>& names) {
  std::ostringstream p;
  for (const std::string& name : names) p << name << "\n";
  p << "\nBased on the above entity list. Perform entity linking with the following rules:\n";
  p << "1. Only merge entities that EXACTLY refer to the same entity such as PERSON, ORGANIZATION, COUNTRY, etc.\n";
  p << "2. The output key should be the entity name after merging, value should be list of original entity names.\n";
  p << "3. For those entities that cannot be merged, just output original name: [original name]\n";
  p << "4. There may be some noises in the strings, such as 'U.S.' or '1. U.S.', these cases should be merged but you "
       "should not clean the original name.\n";
  p << "5. Output in JSON format.\n";
  return p.str();
}

struct LinkOptions {
  int k = 32;
  int rounds = 2;
  std::uint64_t seed = 0;
  int embed_dim = 256;
};

struct LinkResult {
  LinkMap map;
  int malformed = 0;
  int transport_calls = 0;
};

namespace extraction_detail {

// {"canonical": ["alias", ...], ...} restricted to batch members; nullopt on
// unparseable responses
inline std::optional<std::map<std::string, std::vector<std::string>>> parse_link_response(const std::string& response,
                                                                                          const std::set<std::string>& batch) {
  std::size_t open = response.find('{');
  std::size_t close = response.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  nlohmann::json parsed = nlohmann::json::parse(response.substr(open, close - open + 1), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [canon, aliases] : parsed.items()) {
    if (!aliases.is_array()) return std::nullopt;
    for (const auto& alias : aliases) {
      if (!alias.is_string()) continue;
      std::string name = alias.get<std::string>();
      if (batch.count(name)) out[canon].push_back(name);
    }
  }
  return out;
}

}  // namespace extraction_detail

// Clusters names into at most `k` batches per round, asks the transport to
// merge each batch, and composes the partial maps across batches and rounds
// (later rounds run on the canonical names of the previous round). Returns
// a total map: every input name resolves to exactly one canonical.
inline LinkResult link_entities(const std::vector<std::string>& names, const LinkOptions& opt, LlmTransport& transport) {
  if (opt.rounds < 1) throw ConfigError("link_entities: rounds must be positive");
  std::vector<std::string> unique;
  {
    std::set<std::string> seen;
    for (const std::string& n : names)
      if (seen.insert(n).second) unique.push_back(n);
  }
  if (unique.empty()) throw ConfigError("link_entities: no entity names");
  if (opt.k > static_cast<int>(unique.size()))
    throw ConfigError("link_entities: k " + std::to_string(opt.k) + " exceeds " + std::to_string(unique.size()) + " entities");

  LinkResult result;
  std::map<std::string, std::string> resolve;  // original -> current canonical
  for (const std::string& n : unique) resolve[n] = n;

  std::vector<std::string> current = unique;
  for (int round = 0; round < opt.rounds; ++round) {
    int k_eff = std::min<int>(opt.k, static_cast<int>(current.size()));
    Tensor emb = name_embeddings(current, opt.embed_dim);
    std::vector<int> assign = kmeans_assign(emb, k_eff, derive_seed(opt.seed, "linking.round." + std::to_string(round)));
    std::map<std::string, std::string> step;  // current-name -> merged canonical
    for (int c = 0; c < k_eff; ++c) {
      std::vector<std::string> batch;
      for (std::size_t i = 0; i < current.size(); ++i)
        if (assign[i] == c) batch.push_back(current[i]);
      if (batch.empty()) continue;
      ++result.transport_calls;
      std::string response = transport.send(build_linking_prompt(batch));
      std::set<std::string> members(batch.begin(), batch.end());
      auto parsed = extraction_detail::parse_link_response(response, members);
      if (!parsed) {
        ++result.malformed;  // leave this batch unmerged
        continue;
      }
      for (const auto& [canon, aliases] : *parsed)
        for (const std::string& alias : aliases) step.emplace(alias, canon);
    }
    for (auto& [original, canon] : resolve) {
      auto it = step.find(canon);
      if (it != step.end()) canon = it->second;
    }
    std::vector<std::string> next;
    std::set<std::string> seen;
    for (const std::string& n : unique) {
      const std::string& canon = resolve[n];
      if (seen.insert(canon).second) next.push_back(canon);
    }
    current = std::move(next);
  }

  for (const std::string& n : unique) result.map.add(resolve[n], n);
  return result;
}

// Rewrites subject/object through the map; relation, level, and time are
// untouched. Idempotent once names are canonical.
inline std::vector<ParsedEvent> apply_link_map(const std::vector<ParsedEvent>& events, const LinkMap& map) {
  std::vector<ParsedEvent> out = events;
  for (ParsedEvent& ev : out) {
    ev.subject_text = map.resolve(ev.subject_text);
    ev.object_text = map.resolve(ev.object_text);
  }
  return out;
}

// ---------------------------------------------------------------------------
// extraction judging

inline std::string build_judge_prompt(const Article& article, const std::vector<ParsedEvent>& events) {
  std::ostringstream p;
  p << "You are an assistant to check the precision of event extraction from news articles.\n\n";
  p << "[Rules:] 1. Each extracted event is in format of \"subject, relation, object\".\n";
  p << "2. The check result is either True if the event is correct based on the article, otherwise False.\n";
  p << "3. Give a news article and a list of extracted events, you need to output the corresponding list of check "
       "results in json list format, for example: [True, False, True]\n\n";
  p << "[Article:] " << article.title << " " << article.body << "\n\n";
  p << "[Extracted Events:]\n";
  for (std::size_t i = 0; i < events.size(); ++i)
    p << (i + 1) << ". " << events[i].subject_text << "; " << events[i].relation_label << "; " << events[i].object_text << "\n";
  p << "\n[Results:] Check result list:\n";
  return p.str();
}

// Sends the judge prompt and reads back a bracketed boolean list (True/False
// tokens, case-insensitive). The list length must match the event count.
inline double evaluate_extraction(const Article& article, const std::vector<ParsedEvent>& events, LlmTransport& transport) {
  if (events.empty()) throw EmptyBatch("evaluate_extraction: no events to judge");
  std::string response = transport.send(build_judge_prompt(article, events));
  std::size_t open = response.find('[');
  std::size_t close = response.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw MalformedJudgement("judge response has no bracketed list");
  std::vector<bool> verdicts;
  for (const std::string& raw : extraction_detail::split(response.substr(open + 1, close - open - 1), ',')) {
    std::string token = extraction_detail::trim(raw);
    std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::tolower(c); });
    if (token == "true")
      verdicts.push_back(true);
    else if (token == "false")
      verdicts.push_back(false);
    else
      throw MalformedJudgement("unrecognized verdict token '" + raw + "'");
  }
  if (verdicts.size() != events.size())
    throw MalformedJudgement("judge returned " + std::to_string(verdicts.size()) + " verdicts for " +
                             std::to_string(events.size()) + " events");
  double hits = 0;
  for (bool v : verdicts) hits += v ? 1.0 : 0.0;
  return hits / static_cast<double>(events.size());
}

}  // namespace logo
