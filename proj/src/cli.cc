// cli.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Copyright 2026 The convstruct Authors.

#include "convstruct/cli.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convstruct/analytics.h"
#include "convstruct/corpus.h"
#include "convstruct/error.h"
#include "convstruct/hmm.h"
#include "convstruct/random.h"
#include "convstruct/topology.h"
#include "convstruct/vq.h"
#include "text_io.h"

namespace convstruct {

namespace {

using text::format_double;

struct Preset {
  std::string_view name;
  std::size_t k_agent;
  std::size_t k_user;
  std::size_t states;
};

constexpr Preset kPresets[] = {
    {"negotiation", 14, 14, 8},
    {"support-small", 60, 60, 12},
    {"support-large", 120, 120, 12},
};

constexpr std::size_t kDefaultK = 14;
constexpr std::size_t kDefaultStates = 8;

const std::vector<std::string> kConfigKeys = {
    "alphabet", "eps",   "k-agent",   "k-user", "kmeans-max-iter",
    "kmeans-tol", "label", "m",       "max-iter", "n",
    "preset",   "prune", "rel-tol",   "seed",   "split",
    "states",   "threads", "top-k"};

const Preset* find_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return &p;
  return nullptr;
}

// Every value a subcommand may read. Unset optionals fall through to the
// config file, then the preset, then the built-in default.
struct Options {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  std::string corpus;
  std::string embeddings;
  std::string codebooks;
  std::string model;
  std::string out;
  std::string history;
  std::string view;
  std::optional<std::string> split;
  std::optional<std::string> label;
  std::string train_split = "train";
  std::string test_split = "test";
  std::string unit = "state";
  std::string role;

  std::optional<std::size_t> k_agent;
  std::optional<std::size_t> k_user;
  std::optional<std::size_t> states;
  std::optional<std::size_t> alphabet;
  std::optional<int> max_iter;
  std::optional<double> rel_tol;
  std::optional<double> eps;
  std::optional<int> kmeans_max_iter;
  std::optional<double> kmeans_tol;
  std::optional<double> prune;
  std::optional<std::size_t> n;
  std::optional<std::size_t> top_k;
  std::optional<std::size_t> m;
  std::optional<int> id;
  std::size_t max_representatives = 1;
  std::size_t count = 10;
  std::size_t max_len = 200;
  bool no_collapse = false;
  bool no_summaries = false;
};

class Context {
 public:
  Context(const Options& opts, std::ostream& out, std::ostream& err)
      : opts_(opts), out_(out), err_(err) {}

  void prepare() {
    if (!opts_.config.empty()) load_config(opts_.config);
    std::string name = opts_.preset;
    if (name.empty()) {
      if (const auto it = config_.find("preset"); it != config_.end())
        name = it->second;
    }
    if (!name.empty()) {
      preset_ = find_preset(name);
      if (!preset_) throw DataError("unknown preset \"" + name + "\"");
    }
  }

  template <class T>
  T pick(const std::optional<T>& flag, const std::string& key,
         std::optional<T> preset_value, T fallback) const {
    if (flag) return *flag;
    if (const auto it = config_.find(key); it != config_.end()) {
      T value{};
      if (!CLI::detail::lexical_cast(it->second, value))
        throw DataError("config " + opts_.config + ": bad value for " + key +
                        ": " + it->second);
      return value;
    }
    if (preset_value) return *preset_value;
    return fallback;
  }

  const Preset* preset() const { return preset_; }
  const Options& opts() const { return opts_; }

  std::uint64_t seed() const {
    return pick<std::uint64_t>(opts_.seed, "seed", std::nullopt, 0);
  }

  unsigned threads() const {
    unsigned fallback = 1;
    if (const char* env = std::getenv("CONVSTRUCT_THREADS"); env && *env) {
      unsigned v = 0;
      if (CLI::detail::lexical_cast(std::string(env), v) && v > 0)
        fallback = v;
      else
        note("ignoring CONVSTRUCT_THREADS=" + std::string(env));
    }
    const unsigned t = pick<unsigned>(opts_.threads, "threads", std::nullopt,
                                      fallback);
    if (t == 0) throw DataError("threads must be positive");
    return t;
  }

  std::size_t k_agent() const {
    return pick<std::size_t>(opts_.k_agent, "k-agent",
                             preset_ ? std::optional(preset_->k_agent)
                                     : std::nullopt,
                             kDefaultK);
  }
  std::size_t k_user() const {
    return pick<std::size_t>(opts_.k_user, "k-user",
                             preset_ ? std::optional(preset_->k_user)
                                     : std::nullopt,
                             kDefaultK);
  }
  std::size_t states() const {
    return pick<std::size_t>(opts_.states, "states",
                             preset_ ? std::optional(preset_->states)
                                     : std::nullopt,
                             kDefaultStates);
  }
  // 0 means infer from the data.
  std::size_t alphabet() const {
    return pick<std::size_t>(
        opts_.alphabet, "alphabet",
        preset_ ? std::optional(preset_->k_agent + preset_->k_user)
                : std::nullopt,
        0);
  }

  EmConfig em() const {
    EmConfig cfg;
    cfg.max_iter = pick<int>(opts_.max_iter, "max-iter", std::nullopt,
                             cfg.max_iter);
    cfg.rel_tol = pick<double>(opts_.rel_tol, "rel-tol", std::nullopt,
                               cfg.rel_tol);
    cfg.smoothing_eps = pick<double>(opts_.eps, "eps", std::nullopt,
                                     cfg.smoothing_eps);
    cfg.threads = threads();
    return cfg;
  }

  KMeansOptions kmeans() const {
    KMeansOptions km;
    km.seed = seed();
    km.threads = threads();
    km.max_iter = pick<int>(opts_.kmeans_max_iter, "kmeans-max-iter",
                            std::nullopt, km.max_iter);
    km.tol = pick<double>(opts_.kmeans_tol, "kmeans-tol", std::nullopt, km.tol);
    return km;
  }

  std::string split() const {
    return pick<std::string>(opts_.split, "split", std::nullopt, "train");
  }
  std::string label() const {
    return pick<std::string>(opts_.label, "label", std::nullopt, "outcome");
  }
  std::size_t n() const { return pick<std::size_t>(opts_.n, "n", std::nullopt, 2); }
  std::size_t top_k() const {
    return pick<std::size_t>(opts_.top_k, "top-k", std::nullopt, 5);
  }
  std::size_t m() const { return pick<std::size_t>(opts_.m, "m", std::nullopt, 3); }
  double prune() const {
    return pick<double>(opts_.prune, "prune", std::nullopt, 0.01);
  }

  void note(const std::string& msg) const {
    err_ << "convstruct: " << msg << '\n';
  }

  // Report text to --out, or to standard output when it is not given.
  void emit(const std::string& text) const {
    if (opts_.out.empty())
      out_ << text;
    else
      write_file(opts_.out, text);
  }

 private:
  void load_config(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      const std::string where = path + ":" + std::to_string(number);
      if (eq == std::string::npos)
        throw DataError(where + ": expected key = value");
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) ==
          kConfigKeys.end())
        throw DataError(where + ": unknown key \"" + key + "\"");
      if (!config_.emplace(key, value).second)
        throw DataError(where + ": duplicate key \"" + key + "\"");
    }
  }

  const Options& opts_;
  std::ostream& out_;
  std::ostream& err_;
  std::map<std::string, std::string> config_;
  const Preset* preset_ = nullptr;
};

ConversationCorpus load_corpus(const Context& ctx) {
  const Options& o = ctx.opts();
  ConversationCorpus corpus = load_conversations(o.corpus);
  if (!o.embeddings.empty())
    corpus = attach_embeddings(std::move(corpus),
                               read_embedding_matrix(o.embeddings));
  return corpus;
}

// Conversations whose "split" label equals the requested split; every
// conversation when the value is "all" or when no conversation is labeled.
ConversationCorpus training_subset(const Context& ctx,
                                   const ConversationCorpus& corpus) {
  const std::string split = ctx.split();
  if (split == "all") return corpus;
  bool any_split = false;
  ConversationCorpus subset;
  subset.embedding_dim = corpus.embedding_dim;
  subset.alphabet_size = corpus.alphabet_size;
  for (const auto& conv : corpus.conversations) {
    const auto it = conv.labels.find("split");
    if (it == conv.labels.end()) continue;
    any_split = true;
    if (it->second == split) subset.conversations.push_back(conv);
  }
  if (!any_split) {
    ctx.note("no split labels; training on all " +
             std::to_string(corpus.conversations.size()) + " conversations");
    return corpus;
  }
  if (subset.conversations.empty())
    throw DataError("no conversations in split \"" + split + "\"");
  ctx.note("training on " + std::to_string(subset.conversations.size()) +
           " conversations of split \"" + split + "\"");
  return subset;
}

struct Symbols {
  ConversationCorpus corpus;
  std::vector<DiscretizedConversation> discretized;
  std::size_t alphabet = 0;
};

// Dialogue-act sequences from codebooks when given, else from the turns'
// cluster fields.
Symbols load_symbols(const Context& ctx) {
  Symbols s;
  s.corpus = load_corpus(ctx);
  if (!ctx.opts().codebooks.empty()) {
    const RoleCodebooks books = load_codebooks(ctx.opts().codebooks);
    s.discretized = discretize_corpus(s.corpus, books);
    s.alphabet = books.alphabet_size();
  } else {
    s.discretized = discretized_from_clusters(s.corpus);
    s.alphabet = ctx.alphabet();
  }
  int top = -1;
  for (const auto& d : s.discretized)
    for (int sym : d.symbols) top = std::max(top, sym);
  if (s.alphabet == 0) s.alphabet = static_cast<std::size_t>(top + 1);
  if (top >= 0 && static_cast<std::size_t>(top) >= s.alphabet)
    throw DataError("symbol " + std::to_string(top) +
                    " outside the alphabet of size " +
                    std::to_string(s.alphabet));
  return s;
}

std::vector<std::vector<int>> training_sequences(const Context& ctx,
                                                 const Symbols& s) {
  const ConversationCorpus train = training_subset(ctx, s.corpus);
  std::map<std::string_view, std::size_t> keep;
  for (std::size_t i = 0; i < train.conversations.size(); ++i)
    keep.emplace(train.conversations[i].id, i);
  std::vector<std::vector<int>> seqs;
  for (const auto& d : s.discretized)
    if (keep.count(d.id)) seqs.push_back(d.symbols);
  return seqs;
}

std::vector<DecodedConversation> load_decoded(const ConversationCorpus& corpus,
                                              const std::string& path) {
  auto decoded = decoded_from_states(corpus);
  if (decoded.empty())
    throw DataError(path + ": no decoded conversations");
  return decoded;
}

std::string histogram_text(const std::map<std::string, std::size_t>& h) {
  std::string out;
  for (const auto& [label, c] : h) {
    if (!out.empty()) out += ' ';
    out += label + ":" + std::to_string(c);
  }
  return out.empty() ? "-" : out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string ngram_text(const std::vector<int>& gram) {
  std::string out;
  for (std::size_t i = 0; i < gram.size(); ++i) {
    if (i) out += ' ';
    out += 'S' + std::to_string(gram[i]);
  }
  return out;
}

int cmd_vq_fit(const Context& ctx) {
  const ConversationCorpus corpus = load_corpus(ctx);
  const ConversationCorpus train = training_subset(ctx, corpus);
  const std::size_t ka = ctx.k_agent(), ku = ctx.k_user();
  ctx.note("fitting codebooks k_agent=" + std::to_string(ka) +
           " k_user=" + std::to_string(ku));
  const RoleCodebooks books = fit_role_codebooks(train, ka, ku, ctx.kmeans());
  save_codebooks(books, ctx.opts().out);
  ctx.note("wrote " + ctx.opts().out + " (alphabet " +
           std::to_string(books.alphabet_size()) + ")");
  return kExitOk;
}

int cmd_vq_assign(const Context& ctx) {
  const ConversationCorpus corpus = load_corpus(ctx);
  const RoleCodebooks books = load_codebooks(ctx.opts().codebooks);
  const auto disc = discretize_corpus(corpus, books);
  write_annotated(annotate_clusters(corpus, disc, books.alphabet_size()),
                  ctx.opts().out);
  ctx.note("assigned " + std::to_string(corpus.num_turns()) + " turns");
  return kExitOk;
}

int cmd_hmm_learn(const Context& ctx) {
  const Symbols s = load_symbols(ctx);
  TopologyOptions topo;
  topo.target_states = ctx.states();
  topo.em = ctx.em();
  topo.seed = ctx.seed();
  topo.alphabet_size = s.alphabet;
  topo.on_split = [&](const SplitRecord& r) {
    ctx.note("split " + std::to_string(r.iteration) + ": state " +
             std::to_string(r.parent) + " " +
             std::string(split_kind_name(r.chosen)) + " (temporal " +
             format_double(r.loglik_temporal) + ", contextual " +
             format_double(r.loglik_contextual) + ") -> " +
             std::to_string(r.states_after) + " states");
  };
  const auto seqs = training_sequences(ctx, s);
  ctx.note("learning " + std::to_string(topo.target_states) +
           "-state topology over alphabet " + std::to_string(s.alphabet));
  const TopologyResult result = learn_topology(seqs, topo);
  save_model(result.model, ctx.opts().out);
  if (!ctx.opts().history.empty())
    save_history(result.history, ctx.opts().history);
  ctx.note("final log-likelihood " + format_double(result.history.final_loglik));
  return kExitOk;
}

int cmd_hmm_train(const Context& ctx) {
  const Symbols s = load_symbols(ctx);
  const HmmModel init = load_model(ctx.opts().model);
  const EmResult result = em_train(init, training_sequences(ctx, s), ctx.em());
  save_model(result.model, ctx.opts().out);
  ctx.note("EM " + std::to_string(result.trace.iterations) + " iterations, " +
           (result.trace.converged ? "converged" : "not converged") +
           ", log-likelihood " +
           format_double(result.trace.log_likelihood.back()));
  return kExitOk;
}

int cmd_hmm_decode(const Context& ctx) {
  const Symbols s = load_symbols(ctx);
  const HmmModel model = load_model(ctx.opts().model);
  const DecodeResult result = decode_corpus(model, s.discretized, ctx.threads());
  ConversationCorpus annotated =
      annotate_clusters(s.corpus, s.discretized, s.alphabet);
  annotated = annotate_states(std::move(annotated), result.decoded);
  write_annotated(annotated, ctx.opts().out);
  ctx.note("decoded " + std::to_string(result.decoded.size()) +
           " conversations");
  for (const auto& f : result.failures)
    ctx.note("cannot decode " + f.id + ": " + f.reason);
  return result.failures.empty() ? kExitOk : kExitNumeric;
}

int cmd_hmm_loglik(const Context& ctx) {
  const Symbols s = load_symbols(ctx);
  const HmmModel model = load_model(ctx.opts().model);
  std::string text;
  double total = 0.0;
  std::size_t unreachable = 0;
  for (const auto& d : s.discretized) {
    const double ll = log_likelihood(model, d.symbols);
    if (ll == kLogZero) {
      ++unreachable;
      ctx.note("unreachable sequence " + d.id);
    }
    total += ll;
    text += d.id + '\t' + format_double(ll) + '\n';
  }
  text += "total\t" + format_double(total) + '\n';
  ctx.emit(text);
  return unreachable == 0 ? kExitOk : kExitNumeric;
}

int cmd_hmm_sample(const Context& ctx) {
  const Options& o = ctx.opts();
  const HmmModel model = load_model(o.model);
  const std::size_t ka = ctx.k_agent();
  Rng rng(ctx.seed());
  ConversationCorpus corpus;
  std::size_t cut = 0;
  const int width = static_cast<int>(std::to_string(o.count).size());
  for (std::size_t i = 0; i < o.count; ++i) {
    const HmmSample smp = sample(model, rng, o.max_len);
    if (smp.symbols.empty()) continue;
    cut += !smp.stopped;
    Conversation conv;
    char id[32];
    std::snprintf(id, sizeof id, "sample-%0*zu", width, i);
    conv.id = id;
    for (std::size_t t = 0; t < smp.symbols.size(); ++t) {
      Turn turn;
      turn.role = static_cast<std::size_t>(smp.symbols[t]) < ka ? Role::kAgent
                                                                 : Role::kUser;
      turn.cluster = smp.symbols[t];
      turn.state = smp.states[t];
      conv.turns.push_back(turn);
    }
    corpus.conversations.push_back(std::move(conv));
  }
  if (corpus.conversations.empty())
    throw DataError("sampling produced no conversations");
  if (cut) ctx.note(std::to_string(cut) + " samples cut at max length");
  write_annotated(corpus, o.out);
  return kExitOk;
}

int cmd_analyze_paths(const Context& ctx) {
  const ConversationCorpus corpus = load_conversations(ctx.opts().corpus);
  const auto decoded = load_decoded(corpus, ctx.opts().corpus);
  const PathStats stats = path_statistics(decoded, corpus, ctx.label());
  for (const auto& w : stats.warnings) ctx.note(w);
  std::size_t limit = ctx.opts().top_k.value_or(stats.entries.size());
  limit = std::min(limit, stats.entries.size());
  std::string text = "count\tfrequency\tpath\t" + stats.label_name + "\n";
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& e = stats.entries[i];
    text += std::to_string(e.count) + '\t' + fixed6(stats.frequency(i)) + '\t' +
            format_path(e.path) + '\t' + histogram_text(e.labels) + '\n';
  }
  ctx.emit(text);
  return kExitOk;
}

int cmd_analyze_ngrams(const Context& ctx) {
  const ConversationCorpus corpus = load_conversations(ctx.opts().corpus);
  const auto decoded = load_decoded(corpus, ctx.opts().corpus);
  const NgramCounts counts =
      state_ngrams(decoded, ctx.n(), !ctx.opts().no_collapse);
  std::vector<std::pair<std::vector<int>, std::size_t>> rows(counts.begin(),
                                                             counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string text = "count\tngram\n";
  for (const auto& [gram, c] : rows)
    text += std::to_string(c) + '\t' + ngram_text(gram) + '\n';
  ctx.emit(text);
  return kExitOk;
}

int cmd_analyze_align(const Context& ctx) {
  const ConversationCorpus corpus = load_conversations(ctx.opts().corpus);
  const auto decoded = load_decoded(corpus, ctx.opts().corpus);
  const PathStats stats = path_statistics(decoded, corpus, ctx.label());
  for (const auto& w : stats.warnings) ctx.note(w);
  const PathAlignment align = align_paths_to_labels(stats, ctx.top_k());
  for (const auto& w : align.warnings) ctx.note(w);
  std::string text = "path\tcount\tlabel\tmatched\tdistribution\n";
  for (const auto& row : align.rows)
    text += format_path(row.path) + '\t' + std::to_string(row.count) + '\t' +
            row.label.value_or("-") + '\t' + std::to_string(row.matched) +
            '\t' + histogram_text(row.distribution) + '\n';
  text += "total_matched\t" + std::to_string(align.total_matched) + '\n';
  ctx.emit(text);
  return kExitOk;
}

int cmd_analyze_classify(const Context& ctx) {
  const Options& o = ctx.opts();
  const ConversationCorpus corpus = load_conversations(o.corpus);
  const auto decoded = load_decoded(corpus, o.corpus);
  const std::string label = ctx.label();
  const std::size_t n = ctx.n();
  std::vector<LabeledBag> train, test;
  for (const auto& d : decoded) {
    const auto& labels = corpus.conversations[*corpus.find(d.id)].labels;
    const auto lab = labels.find(label);
    const auto split = labels.find("split");
    if (lab == labels.end() || split == labels.end()) continue;
    LabeledBag bag{ngram_bag(d.states, n, !o.no_collapse), lab->second};
    if (split->second == o.train_split)
      train.push_back(std::move(bag));
    else if (split->second == o.test_split)
      test.push_back(std::move(bag));
  }
  if (train.empty())
    throw DataError("no labeled conversations in split \"" + o.train_split +
                    "\"");
  if (test.empty())
    throw DataError("no labeled conversations in split \"" + o.test_split +
                    "\"");
  std::string text;
  text += "train\t" + std::to_string(train.size()) + '\n';
  text += "test\t" + std::to_string(test.size()) + '\n';
  text += "ngram_accuracy\t" + fixed6(ngram_baseline(train, test, n)) + '\n';
  text += "majority_accuracy\t" + fixed6(majority_baseline(train, test)) + '\n';
  ctx.emit(text);
  return kExitOk;
}

std::size_t members(const std::vector<DecodedConversation>& decoded,
                    const ConversationCorpus& corpus, int state, Role role) {
  std::size_t count = 0;
  for (const auto& d : decoded) {
    const auto& turns = corpus.conversations[*corpus.find(d.id)].turns;
    for (std::size_t t = 0; t < d.states.size(); ++t)
      count += d.states[t] == state && turns[t].role == role;
  }
  return count;
}

int max_state(const std::vector<DecodedConversation>& decoded) {
  int top = -1;
  for (const auto& d : decoded)
    for (int s : d.states) top = std::max(top, s);
  return top;
}

// Top representative lines per state, agent turns before user turns.
std::map<int, std::string> state_summaries(
    const ConversationCorpus& corpus,
    const std::vector<DecodedConversation>& decoded,
    const RoleCodebooks& books, std::size_t m) {
  std::map<int, std::string> lines;
  const int top = max_state(decoded);
  for (int s = 0; s <= top; ++s)
    for (Role role : {Role::kAgent, Role::kUser}) {
      if (members(decoded, corpus, s, role) == 0) continue;
      for (const auto& rep : representatives(
               corpus, decoded, books, {UnitKind::kState, s, role}, m)) {
        std::string& line = lines[s];
        if (!line.empty()) line += '\n';
        line += std::string(role_name(role)) + ": " + rep.text;
      }
    }
  return lines;
}

int cmd_summarize(const Context& ctx) {
  const Options& o = ctx.opts();
  const ConversationCorpus corpus = load_corpus(ctx);
  RoleCodebooks books;
  if (!o.codebooks.empty()) books = load_codebooks(o.codebooks);
  const std::size_t m = ctx.m();
  std::string text;
  auto block = [&](const std::string& title, const SummaryUnit& unit,
                   const std::vector<DecodedConversation>& decoded) {
    text += title + '\n';
    for (const auto& rep : representatives(corpus, decoded, books, unit, m)) {
      char dist[64];
      std::snprintf(dist, sizeof dist, "%.6g", rep.distance);
      text += "  " + rep.conversation_id + "[" + std::to_string(rep.turn) +
              "]\t" + dist + '\t' + rep.text + '\n';
    }
  };
  if (o.unit == "cluster") {
    std::vector<int> ids;
    if (o.id) {
      ids.push_back(*o.id);
    } else {
      std::set<int> seen;
      for (const auto& conv : corpus.conversations)
        for (const auto& turn : conv.turns)
          if (turn.cluster) seen.insert(*turn.cluster);
      if (seen.empty() && books.alphabet_size() > 0)
        for (std::size_t i = 0; i < books.alphabet_size(); ++i)
          seen.insert(static_cast<int>(i));
      ids.assign(seen.begin(), seen.end());
    }
    for (int id : ids)
      block("cluster " + std::to_string(id), {UnitKind::kCluster, id}, {});
    ctx.emit(text);
    return kExitOk;
  }

  const auto decoded = load_decoded(corpus, o.corpus);
  if (!o.view.empty()) {
    const auto it = std::find_if(decoded.begin(), decoded.end(),
                                 [&](const auto& d) { return d.id == o.view; });
    if (it == decoded.end())
      throw DataError("conversation " + o.view + " is not decoded");
    const auto lines = state_summaries(corpus, decoded, books, 1);
    for (const auto& line : summary_view(extract_path(it->states), lines))
      text += line + '\n';
    ctx.emit(text);
    return kExitOk;
  }
  std::vector<Role> roles = {Role::kAgent, Role::kUser};
  if (!o.role.empty()) roles = {parse_role(o.role)};
  std::vector<int> ids;
  if (o.id) {
    ids.push_back(*o.id);
  } else {
    for (int s = 0; s <= max_state(decoded); ++s) ids.push_back(s);
  }
  for (int id : ids)
    for (Role role : roles) {
      if (!o.id && members(decoded, corpus, id, role) == 0) continue;
      block("state " + std::to_string(id) + " " + std::string(role_name(role)),
            {UnitKind::kState, id, role}, decoded);
    }
  ctx.emit(text);
  return kExitOk;
}

int cmd_export_dot(const Context& ctx) {
  const Options& o = ctx.opts();
  const HmmModel model = load_model(o.model);
  TopologyExportOptions opts;
  opts.prune_threshold = ctx.prune();
  opts.include_state_summaries = !o.no_summaries;
  opts.max_representatives = o.max_representatives;
  std::optional<std::map<int, std::string>> summaries;
  std::optional<EdgeLabels> edges;
  if (!o.corpus.empty()) {
    const ConversationCorpus corpus = load_corpus(ctx);
    const auto decoded = load_decoded(corpus, o.corpus);
    if (opts.include_state_summaries) {
      RoleCodebooks books;
      if (!o.codebooks.empty()) books = load_codebooks(o.codebooks);
      summaries = state_summaries(corpus, decoded, books,
                                  opts.max_representatives);
    }
    if (o.label)
      edges = dominant_edge_labels(decoded, corpus, *o.label, model.num_states);
  }
  ctx.emit(export_dot(model, opts, summaries ? &*summaries : nullptr,
                      edges ? &*edges : nullptr));
  return kExitOk;
}

int cmd_export_features(const Context& ctx) {
  const Symbols s = load_symbols(ctx);
  const auto decoded = load_decoded(s.corpus, ctx.opts().corpus);
  std::map<std::string_view, bool> have;
  for (const auto& d : decoded) have[d.id] = true;
  std::vector<DiscretizedConversation> disc;
  for (const auto& d : s.discretized)
    if (have.count(d.id)) disc.push_back(d);
  export_structure_features(decoded, disc, ctx.opts().out);
  ctx.note("wrote " + std::to_string(decoded.size()) + " feature records");
  return kExitOk;
}

struct Command {
  CLI::App* app;
  std::function<int(const Context&)> run;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--preset", o.preset, "Named hyperparameter preset")
      ->check(CLI::IsMember({"negotiation", "support-small", "support-large"}));
  app->add_option("--config", o.config, "key = value configuration file");
  app->add_option("--seed", o.seed, "Random seed (default 0)");
  app->add_option("--threads", o.threads,
                  "Worker threads (default $CONVSTRUCT_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

void add_corpus(CLI::App* app, Options& o, bool required = true) {
  auto* opt = app->add_option("--corpus", o.corpus, "Conversation file (JSON lines)");
  if (required) opt->required();
  app->add_option("--embeddings", o.embeddings, "Binary embedding matrix");
}

void add_symbols(CLI::App* app, Options& o) {
  add_corpus(app, o);
  app->add_option("--codebooks", o.codebooks,
                  "Codebooks for discretization (else turn clusters are used)");
  app->add_option("--alphabet", o.alphabet,
                  "Dialogue-act alphabet size (default: preset or inferred)");
}

void add_em(CLI::App* app, Options& o) {
  app->add_option("--max-iter", o.max_iter, "EM iteration cap (default 50)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--rel-tol", o.rel_tol,
                  "EM relative improvement threshold (default 1e-4)");
  app->add_option("--eps", o.eps, "Smoothing pseudo-count (default 1e-6)");
  app->add_option("--split", o.split,
                  "Training split label value, or \"all\" (default train)");
}

void add_out(CLI::App* app, Options& o, bool required) {
  auto* opt = app->add_option("--out", o.out,
                              required ? "Output file"
                                       : "Output file (default stdout)");
  if (required) opt->required();
}

CLI::App* leaf(CLI::App* parent, const std::string& name,
               const std::string& description, Options& o) {
  CLI::App* app = parent->add_subcommand(name, description);
  add_common(app, o);
  return app;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app("Conversation structure induction with left-to-right HMMs",
               "convstruct");
  app.require_subcommand(1);
  std::vector<Command> commands;

  CLI::App* vq = app.add_subcommand("vq", "Dialogue-act codebooks");
  vq->require_subcommand(1);
  {
    CLI::App* c = leaf(vq, "fit", "Fit per-role K-means codebooks", o);
    add_corpus(c, o);
    c->add_option("--k-agent", o.k_agent, "Agent clusters (default 14)")
        ->check(CLI::PositiveNumber);
    c->add_option("--k-user", o.k_user, "User clusters (default 14)")
        ->check(CLI::PositiveNumber);
    c->add_option("--kmeans-max-iter", o.kmeans_max_iter,
                  "Lloyd iteration cap (default 100)")
        ->check(CLI::PositiveNumber);
    c->add_option("--kmeans-tol", o.kmeans_tol,
                  "Centroid movement threshold (default 1e-6)");
    c->add_option("--split", o.split,
                  "Training split label value, or \"all\" (default train)");
    add_out(c, o, true);
    commands.push_back({c, cmd_vq_fit});
  }
  {
    CLI::App* c = leaf(vq, "assign", "Label turns with their nearest centroid", o);
    add_corpus(c, o);
    c->add_option("--codebooks", o.codebooks, "Codebook file")->required();
    add_out(c, o, true);
    commands.push_back({c, cmd_vq_assign});
  }

  CLI::App* hmm = app.add_subcommand("hmm", "Hidden Markov models");
  hmm->require_subcommand(1);
  {
    CLI::App* c = leaf(hmm, "learn", "Learn a topology by state splitting", o);
    add_symbols(c, o);
    add_em(c, o);
    c->add_option("--states", o.states, "Target state count (default 8)")
        ->check(CLI::Range(std::size_t{3}, std::size_t{100000}));
    c->add_option("--history", o.history, "Split history output file");
    add_out(c, o, true);
    commands.push_back({c, cmd_hmm_learn});
  }
  {
    CLI::App* c = leaf(hmm, "train", "Run EM on a fixed topology", o);
    add_symbols(c, o);
    add_em(c, o);
    c->add_option("--model", o.model, "Initial model")->required();
    add_out(c, o, true);
    commands.push_back({c, cmd_hmm_train});
  }
  {
    CLI::App* c = leaf(hmm, "decode", "Viterbi-decode every conversation", o);
    add_symbols(c, o);
    c->add_option("--model", o.model, "Model file")->required();
    add_out(c, o, true);
    commands.push_back({c, cmd_hmm_decode});
  }
  {
    CLI::App* c = leaf(hmm, "loglik", "Per-conversation log-likelihood", o);
    add_symbols(c, o);
    c->add_option("--model", o.model, "Model file")->required();
    add_out(c, o, false);
    commands.push_back({c, cmd_hmm_loglik});
  }
  {
    CLI::App* c = leaf(hmm, "sample", "Sample conversations from a model", o);
    c->add_option("--model", o.model, "Model file")->required();
    c->add_option("--count", o.count, "Number of samples (default 10)");
    c->add_option("--max-len", o.max_len, "Length cap (default 200)")
        ->check(CLI::PositiveNumber);
    c->add_option("--k-agent", o.k_agent,
                  "Symbols below this are agent turns (default 14)");
    add_out(c, o, true);
    commands.push_back({c, cmd_hmm_sample});
  }

  CLI::App* analyze = app.add_subcommand("analyze", "Decoded-corpus analytics");
  analyze->require_subcommand(1);
  {
    CLI::App* c = leaf(analyze, "paths", "Collapsed path frequencies", o);
    c->add_option("--corpus", o.corpus, "Decoded conversation file")->required();
    c->add_option("--label", o.label, "Grouping label (default outcome)");
    c->add_option("--top-k", o.top_k, "Show only the most frequent paths");
    add_out(c, o, false);
    commands.push_back({c, cmd_analyze_paths});
  }
  {
    CLI::App* c = leaf(analyze, "ngrams", "State n-gram counts", o);
    c->add_option("--corpus", o.corpus, "Decoded conversation file")->required();
    c->add_option("--n", o.n, "n-gram order (default 2)")
        ->check(CLI::PositiveNumber);
    c->add_flag("--no-collapse", o.no_collapse,
                "Count over raw state sequences");
    add_out(c, o, false);
    commands.push_back({c, cmd_analyze_ngrams});
  }
  {
    CLI::App* c = leaf(analyze, "align", "Match frequent paths to labels", o);
    c->add_option("--corpus", o.corpus, "Decoded conversation file")->required();
    c->add_option("--label", o.label, "Label to align (default outcome)");
    c->add_option("--top-k", o.top_k, "Paths to align (default 5)")
        ->check(CLI::PositiveNumber);
    add_out(c, o, false);
    commands.push_back({c, cmd_analyze_align});
  }
  {
    CLI::App* c = leaf(analyze, "classify",
                       "Naive Bayes on state n-grams against majority", o);
    c->add_option("--corpus", o.corpus, "Decoded conversation file")->required();
    c->add_option("--label", o.label, "Target label (default outcome)");
    c->add_option("--n", o.n, "n-gram order (default 2)")
        ->check(CLI::PositiveNumber);
    c->add_flag("--no-collapse", o.no_collapse,
                "Count over raw state sequences");
    c->add_option("--train-split", o.train_split,
                  "Split value used for training (default train)");
    c->add_option("--test-split", o.test_split,
                  "Split value used for testing (default test)");
    add_out(c, o, false);
    commands.push_back({c, cmd_analyze_classify});
  }
  {
    CLI::App* c = leaf(&app, "summarize", "Representative utterances", o);
    add_corpus(c, o);
    c->add_option("--codebooks", o.codebooks, "Codebook file");
    c->add_option("--unit", o.unit, "state or cluster (default state)")
        ->check(CLI::IsMember({"state", "cluster"}));
    c->add_option("--id", o.id, "Only this state or cluster");
    c->add_option("--role", o.role, "Only this role (states)")
        ->check(CLI::IsMember({"agent", "user"}));
    c->add_option("--m", o.m, "Representatives per unit (default 3)")
        ->check(CLI::PositiveNumber);
    c->add_option("--view", o.view,
                  "Print one summary line per path element of this conversation");
    add_out(c, o, false);
    commands.push_back({c, cmd_summarize});
  }

  CLI::App* exp = app.add_subcommand("export", "Graph and feature exports");
  exp->require_subcommand(1);
  {
    CLI::App* c = leaf(exp, "dot", "Topology graph in DOT format", o);
    c->add_option("--model", o.model, "Model file")->required();
    c->add_option("--prune", o.prune, "Drop edges below this (default 0.01)")
        ->check(CLI::Range(0.0, 1.0));
    add_corpus(c, o, false);
    c->add_option("--codebooks", o.codebooks, "Codebook file");
    c->add_option("--label", o.label, "Color edges by this label");
    c->add_flag("--no-summaries", o.no_summaries,
                "Leave representative text out of state nodes");
    c->add_option("--max-representatives", o.max_representatives,
                  "Lines per state and role (default 1)")
        ->check(CLI::PositiveNumber);
    add_out(c, o, false);
    commands.push_back({c, cmd_export_dot});
  }
  {
    CLI::App* c = leaf(exp, "features", "Cluster and state sequences", o);
    add_symbols(c, o);
    add_out(c, o, true);
    commands.push_back({c, cmd_export_features});
  }

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (auto subs = app.get_subcommands(); !subs.empty();
         subs = subs.front()->get_subcommands())
      target = subs.front();
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* target = &app;
    for (auto subs = app.get_subcommands(); !subs.empty();
         subs = subs.front()->get_subcommands())
      target = subs.front();
    err << "convstruct: " << e.what() << "\n\n" << target->help();
    return kExitUsage;
  }

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    Context ctx(o, out, err);
    ctx.prepare();
    return cmd.run(ctx);
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  try {
    return run(args, out, err);
  } catch (const NumericError& e) {
    err << "convstruct: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "convstruct: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "convstruct: " << e.what() << '\n';
    return kExitData;
  }
}

int run_cli(const std::vector<std::string>& args) {
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace convstruct
