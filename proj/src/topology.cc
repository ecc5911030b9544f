// topology.cc
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

#include "convstruct/topology.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>

#include "convstruct/corpus.h"
#include "convstruct/error.h"
#include "convstruct/random.h"
#include "text_io.h"

namespace convstruct {

namespace {

void check_parent(const HmmModel& model, std::size_t parent) {
  if (parent >= model.num_states)
    throw DataError("split: state " + std::to_string(parent) +
                    " out of range for a " + std::to_string(model.num_states) +
                    "-state model");
}

// Copy of model with one more state, index S, that has no edges, no start
// mass and no emissions yet. The stop column moves from S to S + 1.
HmmModel grow(const HmmModel& model) {
  const std::size_t S = model.num_states;
  HmmModel out = HmmModel::empty(S + 1, model.alphabet_size);
  for (std::size_t i = 0; i < S; ++i) {
    out.start[i] = model.start[i];
    for (std::size_t j = 0; j < S; ++j) out.log_trans(i, j) = model.log_trans(i, j);
    out.log_trans(i, out.stop()) = model.log_trans(i, model.stop());
    for (std::size_t v = 0; v < model.alphabet_size; ++v)
      out.log_emit(i, v) = model.log_emit(i, v);
  }
  out.order = model.order;
  return out;
}

void insert_in_order(HmmModel& out, std::size_t parent, std::size_t child,
                     bool before) {
  auto it = std::find(out.order.begin(), out.order.end(),
                      static_cast<int>(parent));
  if (!before) ++it;
  out.order.insert(it, static_cast<int>(child));
}

void renormalize(std::span<double> logs) {
  const double norm = log_sum_exp(logs);
  for (double& l : logs)
    if (l != kLogZero) l -= norm;
}

}  // namespace

std::string_view split_kind_name(SplitKind kind) {
  return kind == SplitKind::kTemporal ? "temporal" : "contextual";
}

HmmModel init_three_state(double mean_length, std::size_t alphabet_size,
                          std::uint64_t seed) {
  if (!(mean_length >= 3.0))
    throw DataError("initial topology needs a mean sequence length of at "
                    "least 3, got " + text::format_double(mean_length));
  if (alphabet_size == 0) throw DataError("initial topology: empty alphabet");
  constexpr double kShare[3] = {0.15, 0.70, 0.15};
  HmmModel m = HmmModel::empty(3, alphabet_size);
  m.start[0] = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double duration = kShare[s] * mean_length;
    const double self = std::max(0.0, 1.0 - 1.0 / duration);
    m.log_trans(s, s) = self > 0.0 ? std::log(self) : kLogZero;
    m.log_trans(s, s + 1) = std::log1p(-self);
  }
  Rng rng(seed);
  std::vector<double> p(alphabet_size);
  for (std::size_t s = 0; s < 3; ++s) {
    double total = 0.0;
    for (auto& v : p) {
      v = (1.0 + 1e-3 * (2.0 * rng.uniform() - 1.0)) /
          static_cast<double>(alphabet_size);
      total += v;
    }
    for (std::size_t v = 0; v < alphabet_size; ++v)
      m.log_emit(s, v) = std::log(p[v] / total);
  }
  m.validate();
  return m;
}

std::size_t select_split_state(const HmmModel& model) {
  std::size_t best = 0;
  double best_h = -1.0;
  for (std::size_t s = 0; s < model.num_states; ++s) {
    const double h = emission_entropy(model, s);
    if (h > best_h) {
      best_h = h;
      best = s;
    }
  }
  return best;
}

HmmModel temporal_split(const HmmModel& model, std::size_t parent) {
  check_parent(model, parent);
  const std::size_t S = model.num_states, child = S;
  HmmModel out = grow(model);
  for (std::size_t i = 0; i < S; ++i) {
    if (i == parent) continue;
    out.log_trans(i, child) = model.log_trans(i, parent);
    out.log_trans(i, parent) = kLogZero;
  }
  out.start[child] = model.start[parent];
  out.start[parent] = kLogZero;

  for (std::size_t j = 0; j < S; ++j)
    if (j != parent) out.log_trans(child, j) = model.log_trans(parent, j);
  out.log_trans(child, out.stop()) = model.log_trans(parent, model.stop());
  const double self = model.log_trans(parent, parent);
  const double half = self == kLogZero ? kLogZero : self - std::numbers::ln2;
  out.log_trans(child, child) = half;
  out.log_trans(child, parent) = half;

  for (std::size_t v = 0; v < model.alphabet_size; ++v)
    out.log_emit(child, v) = model.log_emit(parent, v);
  insert_in_order(out, parent, child, /*before=*/true);
  return out;
}

HmmModel contextual_split(const HmmModel& model, std::size_t parent) {
  check_parent(model, parent);
  const std::size_t V = model.alphabet_size;
  if (V < 2) throw DataError("contextual split needs at least two symbols");
  const std::size_t S = model.num_states, child = S;
  HmmModel out = grow(model);

  for (std::size_t i = 0; i < S; ++i) {
    if (i == parent || model.log_trans(i, parent) == kLogZero) continue;
    out.log_trans(i, child) = model.log_trans(i, parent);
    renormalize({out.trans.data() + i * out.trans_cols(), out.trans_cols()});
  }
  if (model.start[parent] != kLogZero) {
    out.start[child] = model.start[parent];
    renormalize(out.start);
  }

  for (std::size_t j = 0; j < S; ++j)
    if (j != parent) out.log_trans(child, j) = model.log_trans(parent, j);
  out.log_trans(child, child) = model.log_trans(parent, parent);
  out.log_trans(child, out.stop()) = model.log_trans(parent, model.stop());

  std::size_t top = 0;
  for (std::size_t v = 1; v < V; ++v)
    if (model.log_emit(parent, v) > model.log_emit(parent, top)) top = v;
  double rest = 0.0;
  for (std::size_t v = 0; v < V; ++v)
    if (v != top) rest += std::exp(model.log_emit(parent, v));
  for (std::size_t v = 0; v < V; ++v) {
    if (v == top)
      out.log_emit(child, v) = kLogZero;
    else if (rest < 1e-12)
      out.log_emit(child, v) = -std::log(static_cast<double>(V - 1));
    else
      out.log_emit(child, v) = model.log_emit(parent, v) == kLogZero
                                   ? kLogZero
                                   : model.log_emit(parent, v) - std::log(rest);
  }
  insert_in_order(out, parent, child, /*before=*/false);
  return out;
}

TopologyResult learn_topology(const std::vector<std::vector<int>>& corpus,
                              const TopologyOptions& options) {
  if (options.target_states < 3)
    throw DataError("target state count must be at least 3");
  if (corpus.empty()) throw DataError("topology learning: empty corpus");
  std::size_t total = 0;
  int max_symbol = -1;
  for (const auto& seq : corpus) {
    total += seq.size();
    for (int c : seq) max_symbol = std::max(max_symbol, c);
  }
  std::size_t alphabet = options.alphabet_size;
  if (alphabet == 0) alphabet = static_cast<std::size_t>(max_symbol + 1);
  const double mean_length =
      static_cast<double>(total) / static_cast<double>(corpus.size());

  TopologyResult result;
  EmResult trained = em_train(init_three_state(mean_length, alphabet, options.seed),
                              corpus, options.em);
  result.history.initial_loglik = trained.trace.log_likelihood.back();
  result.model = std::move(trained.model);

  int iteration = 0;
  while (result.model.num_states < options.target_states) {
    ++iteration;
    const std::size_t parent = select_split_state(result.model);
    const HmmModel temporal = temporal_split(result.model, parent);
    const HmmModel contextual = contextual_split(result.model, parent);
    EmResult t, c;
    if (options.em.threads > 1) {
      auto pending = std::async(std::launch::async, [&] {
        return em_train(contextual, corpus, options.em);
      });
      t = em_train(temporal, corpus, options.em);
      c = pending.get();
    } else {
      t = em_train(temporal, corpus, options.em);
      c = em_train(contextual, corpus, options.em);
    }
    SplitRecord rec;
    rec.iteration = iteration;
    rec.parent = static_cast<int>(parent);
    rec.loglik_temporal = t.trace.log_likelihood.back();
    rec.loglik_contextual = c.trace.log_likelihood.back();
    rec.chosen = rec.loglik_temporal >= rec.loglik_contextual
                     ? SplitKind::kTemporal
                     : SplitKind::kContextual;
    result.model =
        std::move(rec.chosen == SplitKind::kTemporal ? t.model : c.model);
    rec.states_after = result.model.num_states;
    result.history.records.push_back(rec);
    if (options.on_split) options.on_split(rec);
  }
  result.history.final_loglik =
      result.history.records.empty()
          ? result.history.initial_loglik
          : std::max(result.history.records.back().loglik_temporal,
                     result.history.records.back().loglik_contextual);
  return result;
}

std::string format_history(const SplitHistory& history) {
  std::string out = "convstruct-split-history 1\n";
  out += "initial_loglik " + text::format_double(history.initial_loglik) + "\n";
  out += "final_loglik " + text::format_double(history.final_loglik) + "\n";
  out += "# split iteration parent chosen loglik_temporal loglik_contextual "
         "states_after\n";
  for (const auto& r : history.records) {
    out += "split " + std::to_string(r.iteration) + " " +
           std::to_string(r.parent) + " " +
           std::string(split_kind_name(r.chosen)) + " " +
           text::format_double(r.loglik_temporal) + " " +
           text::format_double(r.loglik_contextual) + " " +
           std::to_string(r.states_after) + "\n";
  }
  return out;
}

SplitHistory parse_history(std::string_view contents) {
  text::LineCursor in(text::split_lines(contents), "split history");
  const auto& header = in.expect("convstruct-split-history");
  if (header.words[1] != "1")
    text::fail(in.what(), header.number, "unsupported version");
  SplitHistory h;
  const auto& il = in.expect("initial_loglik");
  h.initial_loglik = text::parse_double(il.words[1], in.what(), il.number);
  const auto& fl = in.expect("final_loglik");
  h.final_loglik = text::parse_double(fl.words[1], in.what(), fl.number);
  while (!in.done()) {
    const auto& l = in.expect("split", 7);
    SplitRecord r;
    r.iteration = static_cast<int>(text::parse_int(l.words[1], in.what(), l.number));
    r.parent = static_cast<int>(text::parse_int(l.words[2], in.what(), l.number));
    if (l.words[3] == "temporal")
      r.chosen = SplitKind::kTemporal;
    else if (l.words[3] == "contextual")
      r.chosen = SplitKind::kContextual;
    else
      text::fail(in.what(), l.number, "unknown split kind");
    r.loglik_temporal = text::parse_double(l.words[4], in.what(), l.number);
    r.loglik_contextual = text::parse_double(l.words[5], in.what(), l.number);
    r.states_after = text::parse_uint(l.words[6], in.what(), l.number);
    h.records.push_back(r);
  }
  return h;
}

void save_history(const SplitHistory& history,
                  const std::filesystem::path& path) {
  write_file(path, format_history(history));
}

SplitHistory load_history(const std::filesystem::path& path) {
  try {
    return parse_history(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace convstruct
