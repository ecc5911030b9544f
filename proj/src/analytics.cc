// analytics.cc
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

#include "convstruct/analytics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "convstruct/error.h"
#include "convstruct/kernels.h"
#include "convstruct/parallel.h"
#include "json.hpp"

namespace convstruct {

namespace {

constexpr std::string_view kFeatureHeader =
    R"({"format":"convstruct-features","version":1})";

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (ch == '\n') {
      out += "\\n";
    } else {
      out += ch;
    }
  }
  return out;
}

std::string node_name(int state, std::size_t num_states) {
  if (state < 0) return "START";
  if (static_cast<std::size_t>(state) == num_states) return "STOP";
  return "S" + std::to_string(state);
}

std::vector<int> json_ints(const nlohmann::json& v, const char* key,
                           std::size_t line) {
  const auto it = v.find(key);
  if (it == v.end() || !it->is_array())
    throw DataError("features line " + std::to_string(line) +
                    ": missing array \"" + key + "\"");
  std::vector<int> out;
  for (const auto& x : *it) {
    if (!x.is_number_integer())
      throw DataError("features line " + std::to_string(line) +
                      ": non-integer in \"" + key + "\"");
    out.push_back(x.get<int>());
  }
  return out;
}

}  // namespace

DecodeResult decode_corpus(const HmmModel& model,
                           const std::vector<DiscretizedConversation>& input,
                           unsigned threads) {
  std::vector<std::optional<DecodedConversation>> slots(input.size());
  std::vector<std::string> errors(input.size());
  parallel_for_blocks(num_blocks(input.size()), threads, [&](std::size_t b) {
    const std::size_t end = std::min(input.size(), (b + 1) * kReductionBlock);
    for (std::size_t i = b * kReductionBlock; i < end; ++i) {
      try {
        ViterbiPath p = viterbi(model, input[i].symbols);
        slots[i] = DecodedConversation{input[i].id, std::move(p.states),
                                       p.log_prob};
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    }
  });
  DecodeResult result;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (slots[i])
      result.decoded.push_back(std::move(*slots[i]));
    else
      result.failures.push_back({input[i].id, errors[i]});
  }
  return result;
}

ConversationCorpus annotate_states(
    ConversationCorpus corpus, const std::vector<DecodedConversation>& decoded) {
  for (const auto& d : decoded) {
    const auto idx = corpus.find(d.id);
    if (!idx) throw DataError("decoded conversation " + d.id + " not in corpus");
    auto& turns = corpus.conversations[*idx].turns;
    if (turns.size() != d.states.size())
      throw DataError("decoded length mismatch for " + d.id);
    for (std::size_t t = 0; t < turns.size(); ++t) turns[t].state = d.states[t];
  }
  return corpus;
}

std::vector<DecodedConversation> decoded_from_states(
    const ConversationCorpus& corpus) {
  std::vector<DecodedConversation> out;
  for (const auto& conv : corpus.conversations) {
    DecodedConversation d;
    d.id = conv.id;
    bool complete = true;
    for (const auto& turn : conv.turns) {
      if (!turn.state) {
        complete = false;
        break;
      }
      d.states.push_back(*turn.state);
    }
    if (!complete) {
      bool any = false;
      for (const auto& turn : conv.turns) any = any || turn.state.has_value();
      if (any)
        throw DataError("conversation " + conv.id +
                        " is only partially decoded");
      continue;
    }
    out.push_back(std::move(d));
  }
  return out;
}

Path extract_path(std::span<const int> states) {
  if (states.empty()) throw DataError("extract_path: empty state sequence");
  Path path;
  for (int s : states)
    if (path.empty() || path.back() != s) path.push_back(s);
  return path;
}

std::string format_path(const Path& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '-';
    out += 'S' + std::to_string(path[i]);
  }
  return out;
}

PathStats path_statistics(const std::vector<DecodedConversation>& decoded,
                          const ConversationCorpus& corpus,
                          const std::string& label_name) {
  PathStats stats;
  stats.label_name = label_name;
  std::map<Path, PathEntry> table;
  std::size_t labeled = 0;
  for (const auto& d : decoded) {
    const auto idx = corpus.find(d.id);
    if (!idx)
      throw DataError("decoded conversation " + d.id + " not in corpus");
    Path path = extract_path(d.states);
    PathEntry& entry = table[path];
    entry.path = std::move(path);
    ++entry.count;
    ++stats.total;
    const auto& labels = corpus.conversations[*idx].labels;
    if (const auto it = labels.find(label_name); it != labels.end()) {
      ++entry.labels[it->second];
      ++labeled;
    }
  }
  if (labeled == 0 && !decoded.empty())
    stats.warnings.push_back("no conversation carries label \"" + label_name +
                             "\"; histograms are empty");
  else if (labeled < stats.total)
    stats.warnings.push_back(std::to_string(stats.total - labeled) +
                             " conversations lack label \"" + label_name +
                             "\"");
  for (auto& [path, entry] : table) stats.entries.push_back(std::move(entry));
  std::stable_sort(stats.entries.begin(), stats.entries.end(),
                   [](const PathEntry& a, const PathEntry& b) {
                     return a.count > b.count;
                   });
  return stats;
}

NgramCounts ngram_bag(std::span<const int> states, std::size_t n,
                      bool collapse) {
  if (n == 0) throw DataError("n-gram order must be positive");
  NgramCounts counts;
  if (states.empty()) return counts;
  const Path seq = collapse ? extract_path(states)
                            : Path(states.begin(), states.end());
  for (std::size_t i = 0; i + n <= seq.size(); ++i)
    ++counts[std::vector<int>(seq.begin() + i, seq.begin() + i + n)];
  return counts;
}

NgramCounts state_ngrams(const std::vector<DecodedConversation>& decoded,
                         std::size_t n, bool collapse) {
  if (n == 0) throw DataError("n-gram order must be positive");
  NgramCounts total;
  for (const auto& d : decoded)
    for (const auto& [gram, c] : ngram_bag(d.states, n, collapse))
      total[gram] += c;
  return total;
}

std::vector<int> max_weight_assignment(
    const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  if (rows == 0) return {};
  const std::size_t cols = weights.front().size();
  const std::size_t n = std::max(rows, cols);
  double top = 0.0;
  for (const auto& r : weights) {
    if (r.size() != cols) throw DataError("assignment: ragged weight matrix");
    for (double w : r) top = std::max(top, w);
  }
  auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i < rows && j < cols) ? weights[i][j] : 0.0;
    return top - w;
  };
  // Shortest augmenting path with potentials, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = match[j];
    if (i >= 1 && i <= rows && j <= cols) result[i - 1] = static_cast<int>(j - 1);
  }
  return result;
}

PathAlignment align_paths_to_labels(const PathStats& stats,
                                    std::size_t top_k) {
  if (stats.entries.empty()) throw DataError("align: no paths");
  if (top_k == 0) throw DataError("align: top_k must be positive");
  PathAlignment out;
  if (top_k > stats.entries.size()) {
    out.warnings.push_back("top_k " + std::to_string(top_k) +
                           " exceeds the " +
                           std::to_string(stats.entries.size()) +
                           " distinct paths; clamped");
    top_k = stats.entries.size();
  }
  std::set<std::string> label_set;
  for (std::size_t p = 0; p < top_k; ++p)
    for (const auto& [label, c] : stats.entries[p].labels) label_set.insert(label);
  if (label_set.empty())
    throw DataError("align: the top paths carry no labels");
  out.labels.assign(label_set.begin(), label_set.end());
  if (top_k > out.labels.size())
    out.warnings.push_back(std::to_string(top_k - out.labels.size()) +
                           " paths exceed the number of labels and stay "
                           "unmatched");

  std::vector<std::vector<double>> weights(
      top_k, std::vector<double>(out.labels.size(), 0.0));
  for (std::size_t p = 0; p < top_k; ++p)
    for (std::size_t l = 0; l < out.labels.size(); ++l) {
      const auto& hist = stats.entries[p].labels;
      if (const auto it = hist.find(out.labels[l]); it != hist.end())
        weights[p][l] = static_cast<double>(it->second);
    }
  const std::vector<int> match = max_weight_assignment(weights);
  for (std::size_t p = 0; p < top_k; ++p) {
    PathAlignment::Row row;
    row.path = stats.entries[p].path;
    row.count = stats.entries[p].count;
    row.distribution = stats.entries[p].labels;
    if (match[p] >= 0) {
      row.label = out.labels[match[p]];
      row.matched = static_cast<std::size_t>(weights[p][match[p]]);
      out.total_matched += row.matched;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<Representative> representatives(
    const ConversationCorpus& corpus,
    const std::vector<DecodedConversation>& decoded,
    const RoleCodebooks& codebooks, const SummaryUnit& unit, std::size_t m) {
  if (m == 0) throw DataError("representatives: m must be positive");
  struct Member {
    const Conversation* conv;
    std::size_t turn;
  };
  std::vector<Member> members;
  if (unit.kind == UnitKind::kCluster) {
    for (const auto& conv : corpus.conversations)
      for (std::size_t t = 0; t < conv.turns.size(); ++t) {
        const Turn& turn = conv.turns[t];
        int id = -1;
        if (turn.cluster) {
          id = *turn.cluster;
        } else if (turn.embedding) {
          id = codebooks.global_id(
              turn.role, assign(codebooks.for_role(turn.role),
                                std::span<const float>(*turn.embedding)));
        }
        if (id == unit.id) members.push_back({&conv, t});
      }
  } else {
    for (const auto& d : decoded) {
      const auto idx = corpus.find(d.id);
      if (!idx)
        throw DataError("decoded conversation " + d.id + " not in corpus");
      const Conversation& conv = corpus.conversations[*idx];
      if (conv.turns.size() != d.states.size())
        throw DataError("decoded length mismatch for " + d.id);
      for (std::size_t t = 0; t < d.states.size(); ++t)
        if (d.states[t] == unit.id && conv.turns[t].role == unit.role)
          members.push_back({&conv, t});
    }
  }
  if (members.empty()) throw DataError("representatives: empty membership");

  std::size_t dim = 0;
  for (const auto& mem : members) {
    const Turn& turn = mem.conv->turns[mem.turn];
    const std::string ref = mem.conv->id + "[" + std::to_string(mem.turn) + "]";
    if (!turn.embedding || !turn.text)
      throw DataError("representatives: member " + ref +
                      " lacks an embedding or text");
    if (dim == 0) dim = turn.embedding->size();
    if (turn.embedding->size() != dim)
      throw DataError("representatives: dimension mismatch at " + ref);
  }
  std::vector<double> mean(dim, 0.0);
  for (const auto& mem : members) {
    const auto& e = *mem.conv->turns[mem.turn].embedding;
    for (std::size_t d = 0; d < dim; ++d) mean[d] += e[d];
  }
  for (double& x : mean) x /= static_cast<double>(members.size());

  std::vector<Representative> ranked;
  ranked.reserve(members.size());
  std::vector<double> point(dim);
  for (const auto& mem : members) {
    const Turn& turn = mem.conv->turns[mem.turn];
    std::copy(turn.embedding->begin(), turn.embedding->end(), point.begin());
    ranked.push_back({mem.conv->id, mem.turn, *turn.text,
                      kernels::squared_distance(point, mean)});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const Representative& a, const Representative& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              if (a.conversation_id != b.conversation_id)
                return a.conversation_id < b.conversation_id;
              return a.turn < b.turn;
            });
  ranked.resize(std::min(m, ranked.size()));
  return ranked;
}

std::vector<std::string> summary_view(
    const Path& path, const std::map<int, std::string>& state_lines) {
  std::vector<std::string> out;
  out.reserve(path.size());
  for (int s : path) {
    const auto it = state_lines.find(s);
    out.push_back("S" + std::to_string(s) + ": " +
                  (it == state_lines.end() ? std::string("(no summary)")
                                           : it->second));
  }
  return out;
}

EdgeLabels dominant_edge_labels(const std::vector<DecodedConversation>& decoded,
                                const ConversationCorpus& corpus,
                                const std::string& label_name,
                                std::size_t num_states) {
  std::map<std::pair<int, int>, std::map<std::string, std::size_t>> tally;
  for (const auto& d : decoded) {
    const auto idx = corpus.find(d.id);
    if (!idx || d.states.empty()) continue;
    const auto& labels = corpus.conversations[*idx].labels;
    const auto it = labels.find(label_name);
    if (it == labels.end()) continue;
    ++tally[{-1, d.states.front()}][it->second];
    for (std::size_t t = 0; t + 1 < d.states.size(); ++t)
      ++tally[{d.states[t], d.states[t + 1]}][it->second];
    ++tally[{d.states.back(), static_cast<int>(num_states)}][it->second];
  }
  EdgeLabels out;
  for (const auto& [edge, hist] : tally) {
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [label, c] : hist)
      if (c > best_count) {
        best_count = c;
        best = &label;
      }
    if (best) out.emplace(edge, *best);
  }
  return out;
}

std::string export_dot(const HmmModel& model,
                       const TopologyExportOptions& options,
                       const std::map<int, std::string>* summaries,
                       const EdgeLabels* edge_labels) {
  const double threshold = options.prune_threshold;
  if (!(threshold >= 0.0 && threshold < 1.0))
    throw DataError("prune threshold must lie in [0, 1)");
  static constexpr const char* kPalette[] = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::map<std::string, std::size_t> color_index;
  if (edge_labels) {
    for (const auto& [edge, label] : *edge_labels) color_index.emplace(label, 0);
    std::size_t k = 0;
    for (auto& [label, idx] : color_index) idx = k++;
  }

  const std::size_t S = model.num_states;
  std::string out = "digraph topology {\n";
  out += "  rankdir=LR;\n";
  out += "  node [shape=box, style=rounded];\n";
  out += "  START [shape=plaintext, label=\"START\"];\n";
  for (int s : model.order) {
    std::string label = "S" + std::to_string(s);
    if (summaries && options.include_state_summaries) {
      if (const auto it = summaries->find(s); it != summaries->end())
        label += "\n" + it->second;
    }
    out += "  S" + std::to_string(s) + " [label=\"" + dot_escape(label) +
           "\"];\n";
  }
  out += "  STOP [shape=doublecircle, label=\"STOP\"];\n";

  auto edge = [&](int from, int to, double log_p) {
    if (log_p == kLogZero) return;
    const double p = std::exp(log_p);
    if (p < threshold) return;
    const double width = 1.0 + 4.0 * (p - threshold) / (1.0 - threshold);
    out += "  " + node_name(from, S) + " -> " + node_name(to, S) +
           " [label=\"" + fixed(p, 3);
    std::string color;
    if (edge_labels) {
      if (const auto it = edge_labels->find({from, to}); it != edge_labels->end()) {
        out += " " + dot_escape(it->second);
        color = kPalette[color_index[it->second] % std::size(kPalette)];
      }
    }
    out += "\", penwidth=" + fixed(width, 2);
    if (!color.empty()) out += ", color=\"" + color + "\"";
    out += "];\n";
  };
  for (std::size_t j = 0; j < S; ++j)
    edge(-1, static_cast<int>(j), model.start[j]);
  for (int s : model.order)
    for (std::size_t j = 0; j <= S; ++j)
      edge(s, static_cast<int>(j), model.log_trans(s, j));
  out += "}\n";
  return out;
}

std::vector<StructureFeatures> structure_features(
    const std::vector<DecodedConversation>& decoded,
    const std::vector<DiscretizedConversation>& discretized) {
  if (decoded.size() != discretized.size())
    throw DataError("features: id mismatch (" + std::to_string(decoded.size()) +
                    " decoded vs " + std::to_string(discretized.size()) +
                    " discretized conversations)");
  std::map<std::string_view, const DecodedConversation*> by_id;
  for (const auto& d : decoded) by_id.emplace(d.id, &d);
  std::vector<StructureFeatures> out;
  out.reserve(discretized.size());
  for (const auto& dc : discretized) {
    const auto it = by_id.find(dc.id);
    if (it == by_id.end())
      throw DataError("features: id mismatch, " + dc.id + " was not decoded");
    const auto& states = it->second->states;
    if (states.size() != dc.symbols.size())
      throw DataError("features: length mismatch for " + dc.id);
    out.push_back({dc.id, dc.symbols, states, extract_path(states)});
  }
  return out;
}

std::string format_structure_features(
    const std::vector<StructureFeatures>& features) {
  std::string out(kFeatureHeader);
  out += '\n';
  for (const auto& f : features) {
    nlohmann::ordered_json rec;
    rec["id"] = f.id;
    rec["clusters"] = f.clusters;
    rec["states"] = f.states;
    rec["path"] = f.path;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<StructureFeatures> parse_structure_features(
    std::string_view contents) {
  std::vector<StructureFeatures> out;
  std::size_t start = 0, line_no = 0;
  bool header = false;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    const std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("features line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    if (!header) {
      if (!rec.is_object() || rec.value("format", "") != "convstruct-features")
        throw DataError("features: missing header line");
      header = true;
      continue;
    }
    const auto id = rec.find("id");
    if (id == rec.end() || !id->is_string())
      throw DataError("features line " + std::to_string(line_no) +
                      ": missing id");
    out.push_back({id->get<std::string>(), json_ints(rec, "clusters", line_no),
                   json_ints(rec, "states", line_no),
                   json_ints(rec, "path", line_no)});
  }
  if (!header) throw DataError("features: missing header line");
  return out;
}

void export_structure_features(
    const std::vector<DecodedConversation>& decoded,
    const std::vector<DiscretizedConversation>& discretized,
    const std::filesystem::path& path) {
  write_file(path, format_structure_features(structure_features(decoded, discretized)));
}

std::vector<StructureFeatures> read_structure_features(
    const std::filesystem::path& path) {
  return parse_structure_features(read_file(path));
}

void NaiveBayes::fit(const std::vector<LabeledBag>& train) {
  if (train.empty()) throw DataError("naive Bayes: empty training set");
  std::map<std::string, std::size_t> docs;
  for (const auto& ex : train) ++docs[ex.label];
  labels_.clear();
  for (const auto& [label, c] : docs) labels_.push_back(label);
  const std::size_t L = labels_.size();
  std::map<std::string, std::size_t> label_index;
  for (std::size_t l = 0; l < L; ++l) label_index[labels_[l]] = l;

  std::map<std::vector<int>, std::vector<double>> feature_counts;
  std::vector<double> label_totals(L, 0.0);
  for (const auto& ex : train) {
    const std::size_t l = label_index[ex.label];
    for (const auto& [gram, c] : ex.features) {
      auto& fc = feature_counts[gram];
      if (fc.empty()) fc.assign(L, 0.0);
      fc[l] += static_cast<double>(c);
      label_totals[l] += static_cast<double>(c);
    }
  }
  const double vocab = static_cast<double>(feature_counts.size());
  log_prior_.assign(L, 0.0);
  log_unseen_.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    log_prior_[l] = std::log(static_cast<double>(docs[labels_[l]]) /
                             static_cast<double>(train.size()));
    log_unseen_[l] = -std::log(label_totals[l] + vocab);
  }
  log_likelihood_.clear();
  for (auto& [gram, fc] : feature_counts) {
    std::vector<double> ll(L);
    for (std::size_t l = 0; l < L; ++l)
      ll[l] = std::log(fc[l] + 1.0) + log_unseen_[l];
    log_likelihood_.emplace(gram, std::move(ll));
  }
}

std::string NaiveBayes::predict(const NgramCounts& features) const {
  if (labels_.empty()) throw DataError("naive Bayes: model is not fitted");
  std::vector<double> score = log_prior_;
  for (const auto& [gram, c] : features) {
    const auto it = log_likelihood_.find(gram);
    if (it == log_likelihood_.end()) continue;
    for (std::size_t l = 0; l < labels_.size(); ++l)
      score[l] += static_cast<double>(c) * it->second[l];
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < labels_.size(); ++l)
    if (score[l] > score[best]) best = l;
  return labels_[best];
}

double ngram_baseline(const std::vector<LabeledBag>& train,
                      const std::vector<LabeledBag>& test, std::size_t n) {
  if (n == 0) throw DataError("n-gram order must be positive");
  for (const auto* set : {&train, &test})
    for (const auto& ex : *set)
      for (const auto& [gram, c] : ex.features)
        if (gram.size() != n)
          throw DataError("naive Bayes: feature of order " +
                          std::to_string(gram.size()) + ", expected " +
                          std::to_string(n));
  NaiveBayes nb;
  nb.fit(train);
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : test) correct += nb.predict(ex.features) == ex.label;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double majority_baseline(const std::vector<LabeledBag>& train,
                         const std::vector<LabeledBag>& test) {
  if (train.empty()) throw DataError("majority baseline: empty training set");
  std::map<std::string, std::size_t> docs;
  for (const auto& ex : train) ++docs[ex.label];
  std::string best;
  std::size_t best_count = 0;
  for (const auto& [label, c] : docs)
    if (c > best_count) {
      best_count = c;
      best = label;
    }
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : test) correct += ex.label == best;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace convstruct
