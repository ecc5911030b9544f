// oracles.h
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

// Independent reference computations for the tests: exhaustive HMM
// enumeration in linear space, clustering agreement scores, graph checks
// and synthetic data generators.

#ifndef CONVSTRUCT_TESTS_ORACLES_H_
#define CONVSTRUCT_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "convstruct/corpus.h"
#include "convstruct/hmm.h"

namespace oracle {

using convstruct::HmmModel;

inline bool close_rel(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

// Linear-space model copy.
struct Linear {
  std::size_t S = 0, V = 0;
  std::vector<double> start;  // S
  std::vector<double> trans;  // S x (S+1)
  std::vector<double> emit;   // S x V

  explicit Linear(const HmmModel& m)
      : S(m.num_states), V(m.alphabet_size), start(m.start.size()),
        trans(m.trans.size()), emit(m.emit.size()) {
    auto lin = [](double x) { return x == -INFINITY ? 0.0 : std::exp(x); };
    std::transform(m.start.begin(), m.start.end(), start.begin(), lin);
    std::transform(m.trans.begin(), m.trans.end(), trans.begin(), lin);
    std::transform(m.emit.begin(), m.emit.end(), emit.begin(), lin);
  }
  double a(std::size_t i, std::size_t j) const { return trans[i * (S + 1) + j]; }
  double b(std::size_t i, int v) const { return emit[i * V + v]; }
};

struct Enumeration {
  double total = 0.0;                 // P(symbols)
  double best = 0.0;                  // max joint
  std::vector<int> best_path;         // lexicographically first maximizer
  std::vector<double> state;          // T x S posteriors
  std::vector<double> pair;           // (T-1) x S x S posteriors
};

// Sums the joint over all S^T state sequences, visited in lexicographic
// order.
inline Enumeration enumerate(const HmmModel& model,
                             const std::vector<int>& symbols) {
  const Linear m(model);
  const std::size_t T = symbols.size(), S = m.S;
  Enumeration e;
  e.state.assign(T * S, 0.0);
  e.pair.assign(T > 0 ? (T - 1) * S * S : 0, 0.0);
  std::vector<int> path(T, 0);
  for (;;) {
    double p = m.start[path[0]] * m.b(path[0], symbols[0]);
    for (std::size_t t = 1; t < T; ++t)
      p *= m.a(path[t - 1], path[t]) * m.b(path[t], symbols[t]);
    p *= m.a(path[T - 1], S);
    e.total += p;
    if (p > e.best) {
      e.best = p;
      e.best_path = path;
    }
    for (std::size_t t = 0; t < T; ++t) e.state[t * S + path[t]] += p;
    for (std::size_t t = 0; t + 1 < T; ++t)
      e.pair[(t * S + path[t]) * S + path[t + 1]] += p;
    std::size_t pos = T;
    while (pos > 0) {
      --pos;
      if (++path[pos] < static_cast<int>(S)) break;
      path[pos] = 0;
      if (pos == 0) {
        pos = T + 1;
        break;
      }
    }
    if (pos == T + 1) break;
  }
  if (e.total > 0) {
    for (double& x : e.state) x /= e.total;
    for (double& x : e.pair) x /= e.total;
  }
  return e;
}

// True when the finite edges of trans, self-loops excluded, contain a cycle.
inline bool has_cycle(const HmmModel& m) {
  const std::size_t S = m.num_states;
  std::vector<int> color(S, 0);
  std::function<bool(std::size_t)> visit = [&](std::size_t u) {
    color[u] = 1;
    for (std::size_t v = 0; v < S; ++v) {
      if (v == u || m.log_trans(u, v) == -INFINITY) continue;
      if (color[v] == 1) return true;
      if (color[v] == 0 && visit(v)) return true;
    }
    color[u] = 2;
    return false;
  };
  for (std::size_t s = 0; s < S; ++s)
    if (color[s] == 0 && visit(s)) return true;
  return false;
}

// Every finite edge u -> v (u != v) goes forward in m.order.
inline bool order_consistent(const HmmModel& m) {
  std::vector<std::size_t> pos(m.num_states);
  for (std::size_t i = 0; i < m.order.size(); ++i) pos[m.order[i]] = i;
  for (std::size_t u = 0; u < m.num_states; ++u)
    for (std::size_t v = 0; v < m.num_states; ++v)
      if (u != v && m.log_trans(u, v) != -INFINITY && pos[u] >= pos[v])
        return false;
  return true;
}

inline double linear_sum(const std::vector<double>& logs, std::size_t begin,
                         std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i)
    if (logs[i] != -INFINITY) s += std::exp(logs[i]);
  return s;
}

// Random left-to-right model. The hidden order is a random permutation;
// each forward edge survives with probability `density`, and every state
// keeps at least one way forward. Emissions may contain exact zeros.
inline HmmModel random_model(std::mt19937_64& rng, std::size_t S,
                             std::size_t V, double density = 0.6,
                             double emit_zero = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> perm(S);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> start(S, 0.0);
  std::vector<std::vector<double>> trans(S, std::vector<double>(S + 1, 0.0));
  std::vector<std::vector<double>> emit(S, std::vector<double>(V, 0.0));
  for (std::size_t i = 0; i < S; ++i) {
    const int s = perm[i];
    if (i == 0 || u(rng) < 0.3) start[s] = 0.05 + u(rng);
    if (u(rng) < 0.7) trans[s][s] = 0.05 + u(rng);
    bool forward = false;
    for (std::size_t j = i + 1; j < S; ++j)
      if (u(rng) < density) {
        trans[s][perm[j]] = 0.05 + u(rng);
        forward = true;
      }
    if (!forward || i + 1 == S || u(rng) < 0.3) trans[s][S] = 0.05 + u(rng);
    bool any = false;
    for (std::size_t v = 0; v < V; ++v)
      if (u(rng) >= emit_zero) {
        emit[s][v] = 0.05 + u(rng);
        any = true;
      }
    if (!any) emit[s][std::uniform_int_distribution<std::size_t>(0, V - 1)(rng)] = 1.0;
  }
  auto normalize = [](std::vector<double>& row) {
    const double z = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& x : row) x /= z;
  };
  normalize(start);
  for (auto& r : trans) normalize(r);
  for (auto& r : emit) normalize(r);
  return convstruct::model_from_probabilities(start, trans, emit);
}

// Random sequence with positive probability under the model, drawn by
// trying uniform sequences and, failing that, by sampling the model.
inline std::vector<int> reachable_sequence(const HmmModel& m,
                                           std::mt19937_64& rng,
                                           std::size_t len) {
  std::uniform_int_distribution<int> sym(0, static_cast<int>(m.alphabet_size) - 1);
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<int> seq(len);
    for (int& s : seq) s = sym(rng);
    if (enumerate(m, seq).total > 0) return seq;
  }
  return {};
}

inline double comb2(double n) { return n * (n - 1) / 2; }

template <class A, class B>
double adjusted_rand_index(const std::vector<A>& a, const std::vector<B>& b) {
  std::map<std::pair<A, B>, double> nij;
  std::map<A, double> ai;
  std::map<B, double> bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, n] : nij) index += comb2(n);
  for (const auto& [k, n] : ai) sa += comb2(n);
  for (const auto& [k, n] : bj) sb += comb2(n);
  const double expected = sa * sb / comb2(static_cast<double>(a.size()));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

// Mutual information over the arithmetic mean of the two entropies.
template <class A, class B>
double normalized_mutual_information(const std::vector<A>& a,
                                     const std::vector<B>& b) {
  const double n = static_cast<double>(a.size());
  std::map<std::pair<A, B>, double> nij;
  std::map<A, double> ai;
  std::map<B, double> bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  double mi = 0, ha = 0, hb = 0;
  for (const auto& [k, c] : nij)
    mi += c / n * std::log(c * n / (ai[k.first] * bj[k.second]));
  for (const auto& [k, c] : ai) ha -= c / n * std::log(c / n);
  for (const auto& [k, c] : bj) hb -= c / n * std::log(c / n);
  if (ha + hb == 0) return 1.0;
  return mi / ((ha + hb) / 2);
}

inline std::size_t brute_nearest(const std::vector<std::vector<double>>& centroids,
                                 const std::vector<double>& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      d += (x[i] - centroids[c][i]) * (x[i] - centroids[c][i]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

// Synthetic conversations whose turns move through `stages` stages. Each
// (role, stage) pair has its own embedding center; labels carry "outcome"
// and a train/test "split".
inline convstruct::ConversationCorpus staged_corpus(std::uint64_t seed,
                                                    std::size_t conversations,
                                                    std::size_t dim = 4,
                                                    std::size_t stages = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_int_distribution<int> len(6, 16);
  std::vector<std::vector<double>> centers(2 * stages, std::vector<double>(dim));
  for (auto& c : centers)
    for (double& x : c) x = u(rng);
  convstruct::ConversationCorpus corpus;
  corpus.embedding_dim = dim;
  for (std::size_t c = 0; c < conversations; ++c) {
    convstruct::Conversation conv;
    char id[32];
    std::snprintf(id, sizeof id, "c%03zu", c);
    conv.id = id;
    const bool long_close = rng() % 2 == 0;
    const int L = len(rng) + (long_close ? 4 : 0);
    for (int t = 0; t < L; ++t) {
      convstruct::Turn turn;
      turn.role = t % 2 == 0 ? convstruct::Role::kAgent : convstruct::Role::kUser;
      const std::size_t stage = std::min<std::size_t>(stages - 1, stages * t / L);
      const auto& mu = centers[(t % 2) * stages + stage];
      std::vector<float> e(dim);
      for (std::size_t d = 0; d < dim; ++d)
        e[d] = static_cast<float>(mu[d] + noise(rng));
      turn.embedding = e;
      turn.text = std::string(convstruct::role_name(turn.role)) + " stage " +
                  std::to_string(stage) + " turn " + std::to_string(t);
      conv.turns.push_back(std::move(turn));
    }
    conv.labels["outcome"] = long_close ? "long" : "short";
    conv.labels["split"] = c % 5 == 4 ? "test" : "train";
    corpus.conversations.push_back(std::move(conv));
  }
  return corpus;
}

}  // namespace oracle

#endif  // CONVSTRUCT_TESTS_ORACLES_H_
