// hmm.cc
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

#include "convstruct/hmm.h"

#include <algorithm>
#include <cmath>

#include "convstruct/corpus.h"
#include "convstruct/error.h"
#include "convstruct/parallel.h"
#include "text_io.h"

namespace convstruct {

namespace {

void check_sequence(const HmmModel& model, std::span<const int> symbols) {
  if (symbols.empty()) throw DataError("empty sequence");
  for (std::size_t t = 0; t < symbols.size(); ++t)
    if (symbols[t] < 0 ||
        static_cast<std::size_t>(symbols[t]) >= model.alphabet_size)
      throw DataError("symbol " + std::to_string(symbols[t]) +
                      " at position " + std::to_string(t) +
                      " is outside the alphabet of size " +
                      std::to_string(model.alphabet_size));
}

// alpha[t * S + s] = log P(c_1..c_t, s_t = s)
double forward(const HmmModel& model, std::span<const int> symbols,
               std::vector<double>& alpha) {
  const std::size_t S = model.num_states, T = symbols.size();
  alpha.assign(T * S, kLogZero);
  std::vector<double> terms(S);
  for (std::size_t s = 0; s < S; ++s)
    alpha[s] = model.start[s] + model.log_emit(s, symbols[0]);
  for (std::size_t t = 1; t < T; ++t) {
    const double* prev = alpha.data() + (t - 1) * S;
    double* cur = alpha.data() + t * S;
    for (std::size_t j = 0; j < S; ++j) {
      const double e = model.log_emit(j, symbols[t]);
      if (e == kLogZero) continue;
      for (std::size_t i = 0; i < S; ++i) terms[i] = prev[i] + model.log_trans(i, j);
      cur[j] = log_sum_exp(terms) + e;
    }
  }
  const double* last = alpha.data() + (T - 1) * S;
  for (std::size_t i = 0; i < S; ++i)
    terms[i] = last[i] + model.log_trans(i, model.stop());
  return log_sum_exp(terms);
}

// beta[t * S + s] = log P(c_{t+1}..c_T, stop | s_t = s)
void backward(const HmmModel& model, std::span<const int> symbols,
              std::vector<double>& beta) {
  const std::size_t S = model.num_states, T = symbols.size();
  beta.assign(T * S, kLogZero);
  std::vector<double> terms(S);
  for (std::size_t s = 0; s < S; ++s)
    beta[(T - 1) * S + s] = model.log_trans(s, model.stop());
  for (std::size_t t = T - 1; t-- > 0;) {
    const double* next = beta.data() + (t + 1) * S;
    double* cur = beta.data() + t * S;
    for (std::size_t i = 0; i < S; ++i) {
      for (std::size_t j = 0; j < S; ++j)
        terms[j] = model.log_trans(i, j) + model.log_emit(j, symbols[t + 1]) +
                   next[j];
      cur[i] = log_sum_exp(terms);
    }
  }
}

struct Counts {
  std::vector<double> start, trans, emit;
  double log_likelihood = 0.0;

  explicit Counts(const HmmModel& m)
      : start(m.num_states, 0.0),
        trans(m.num_states * m.trans_cols(), 0.0),
        emit(m.num_states * m.alphabet_size, 0.0) {}

  void add(const Counts& o) {
    for (std::size_t i = 0; i < start.size(); ++i) start[i] += o.start[i];
    for (std::size_t i = 0; i < trans.size(); ++i) trans[i] += o.trans[i];
    for (std::size_t i = 0; i < emit.size(); ++i) emit[i] += o.emit[i];
    log_likelihood += o.log_likelihood;
  }
};

// Adds the expected sufficient statistics of one sequence. Returns its
// log-likelihood (kLogZero when unreachable, leaving counts untouched).
double accumulate(const HmmModel& model, std::span<const int> symbols,
                  std::vector<double>& alpha, std::vector<double>& beta,
                  Counts& counts) {
  const std::size_t S = model.num_states, T = symbols.size(),
                    C = model.trans_cols(), V = model.alphabet_size;
  const double ll = forward(model, symbols, alpha);
  if (ll == kLogZero) return ll;
  backward(model, symbols, beta);
  for (std::size_t t = 0; t < T; ++t) {
    const double* a = alpha.data() + t * S;
    const double* b = beta.data() + t * S;
    for (std::size_t s = 0; s < S; ++s) {
      const double lg = a[s] + b[s];
      if (lg == kLogZero) continue;
      const double g = std::exp(lg - ll);
      counts.emit[s * V + symbols[t]] += g;
      if (t == 0) counts.start[s] += g;
      if (t == T - 1) counts.trans[s * C + S] += g;
    }
    if (t + 1 == T) continue;
    const double* bn = beta.data() + (t + 1) * S;
    for (std::size_t i = 0; i < S; ++i) {
      if (a[i] == kLogZero) continue;
      for (std::size_t j = 0; j < S; ++j) {
        const double lx = a[i] + model.log_trans(i, j) +
                          model.log_emit(j, symbols[t + 1]) + bn[j];
        if (lx == kLogZero) continue;
        counts.trans[i * C + j] += std::exp(lx - ll);
      }
    }
  }
  return ll;
}

// Expected counts over the corpus, reduced in fixed block order.
Counts expected_counts(const HmmModel& model,
                       const std::vector<std::vector<int>>& corpus,
                       unsigned threads, bool with_counts) {
  const std::size_t blocks = num_blocks(corpus.size());
  std::vector<Counts> partial(blocks, Counts(with_counts ? model : HmmModel{}));
  std::vector<char> unreachable(corpus.size(), 0);
  parallel_for_blocks(blocks, threads, [&](std::size_t b) {
    std::vector<double> alpha, beta;
    Counts& c = partial[b];
    const std::size_t end = std::min(corpus.size(), (b + 1) * kReductionBlock);
    for (std::size_t n = b * kReductionBlock; n < end; ++n) {
      const double ll = with_counts
                            ? accumulate(model, corpus[n], alpha, beta, c)
                            : forward(model, corpus[n], alpha);
      if (ll == kLogZero)
        unreachable[n] = 1;
      else
        c.log_likelihood += ll;
    }
  });
  for (std::size_t n = 0; n < corpus.size(); ++n)
    if (unreachable[n])
      throw NumericError("unreachable sequence at corpus index " +
                         std::to_string(n));
  Counts total(with_counts ? model : HmmModel{});
  for (const auto& c : partial) {
    if (with_counts)
      total.add(c);
    else
      total.log_likelihood += c.log_likelihood;
  }
  return total;
}

// Normalizes counts over the entries allowed by `allowed` (finite current
// parameters, or every entry when allow_all). A row without mass keeps its
// current parameters.
void normalize_row(std::span<const double> counts, std::span<double> params,
                   double eps, bool allow_all) {
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (allow_all || params[i] != kLogZero) total += counts[i] + eps;
  if (!(total > 0.0)) return;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!allow_all && params[i] == kLogZero) continue;
    const double c = counts[i] + eps;
    params[i] = c > 0.0 ? std::log(c / total) : kLogZero;
  }
}

HmmModel maximize(const HmmModel& model, const Counts& counts, double eps) {
  HmmModel next = model;
  const std::size_t S = model.num_states, C = model.trans_cols(),
                    V = model.alphabet_size;
  normalize_row(counts.start, next.start, eps, false);
  for (std::size_t s = 0; s < S; ++s) {
    normalize_row({counts.trans.data() + s * C, C},
                  {next.trans.data() + s * C, C}, eps, false);
    normalize_row({counts.emit.data() + s * V, V},
                  {next.emit.data() + s * V, V}, eps, true);
  }
  return next;
}

double linear_sum(std::span<const double> logs) {
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l);
  return sum;
}

std::string format_probability(double log_p) {
  return log_p == kLogZero ? "zero" : text::format_double(std::exp(log_p));
}

}  // namespace

HmmModel HmmModel::empty(std::size_t num_states, std::size_t alphabet_size) {
  HmmModel m;
  m.num_states = num_states;
  m.alphabet_size = alphabet_size;
  m.start.assign(num_states, kLogZero);
  m.trans.assign(num_states * (num_states + 1), kLogZero);
  m.emit.assign(num_states * alphabet_size, kLogZero);
  m.order.resize(num_states);
  for (std::size_t s = 0; s < num_states; ++s) m.order[s] = static_cast<int>(s);
  return m;
}

void HmmModel::validate(double tol) const {
  const std::size_t S = num_states;
  if (S == 0) throw DataError("model: no states");
  if (alphabet_size == 0) throw DataError("model: empty alphabet");
  if (start.size() != S || trans.size() != S * (S + 1) ||
      emit.size() != S * alphabet_size || order.size() != S)
    throw DataError("model: parameter arrays have the wrong shape");
  auto check_dist = [&](std::span<const double> logs, const std::string& what) {
    for (double l : logs)
      if (std::isnan(l) || l > 1e-12)
        throw DataError("model: " + what + " holds an invalid log-probability");
    const double sum = linear_sum(logs);
    if (std::abs(sum - 1.0) > tol)
      throw DataError("model: " + what + " sums to " +
                      text::format_double(sum));
  };
  check_dist(start, "start distribution");
  for (std::size_t s = 0; s < S; ++s) {
    check_dist(trans_row(s), "transition row " + std::to_string(s));
    check_dist(emit_row(s), "emission row " + std::to_string(s));
  }
  std::vector<int> pos(S, -1);
  for (std::size_t k = 0; k < S; ++k) {
    const int s = order[k];
    if (s < 0 || static_cast<std::size_t>(s) >= S || pos[s] != -1)
      throw DataError("model: order is not a permutation of the states");
    pos[s] = static_cast<int>(k);
  }
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j)
      if (i != j && log_trans(i, j) != kLogZero && pos[i] >= pos[j])
        throw DataError("model: edge " + std::to_string(i) + "->" +
                        std::to_string(j) +
                        " runs against the left-to-right order");
}

std::vector<int> topological_order(const HmmModel& model) {
  const std::size_t S = model.num_states;
  std::vector<int> indegree(S, 0);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j)
      if (i != j && model.log_trans(i, j) != kLogZero) ++indegree[j];
  std::vector<int> order;
  std::vector<char> done(S, 0);
  while (order.size() < S) {
    std::size_t next = S;
    for (std::size_t s = 0; s < S; ++s)
      if (!done[s] && indegree[s] == 0) {
        next = s;
        break;
      }
    if (next == S)
      throw DataError("model: transition graph has a cycle");
    done[next] = 1;
    order.push_back(static_cast<int>(next));
    for (std::size_t j = 0; j < S; ++j)
      if (j != next && model.log_trans(next, j) != kLogZero) --indegree[j];
  }
  return order;
}

HmmModel model_from_probabilities(
    const std::vector<double>& start,
    const std::vector<std::vector<double>>& trans,
    const std::vector<std::vector<double>>& emit) {
  const std::size_t S = start.size();
  if (S == 0 || trans.size() != S || emit.size() != S || emit[0].empty())
    throw DataError("model: inconsistent parameter shapes");
  HmmModel m = HmmModel::empty(S, emit[0].size());
  auto to_log = [](double p) { return p > 0.0 ? std::log(p) : kLogZero; };
  for (std::size_t s = 0; s < S; ++s) {
    m.start[s] = to_log(start[s]);
    if (trans[s].size() != S + 1 || emit[s].size() != m.alphabet_size)
      throw DataError("model: inconsistent parameter shapes");
    for (std::size_t j = 0; j <= S; ++j) m.log_trans(s, j) = to_log(trans[s][j]);
    for (std::size_t v = 0; v < m.alphabet_size; ++v)
      m.log_emit(s, v) = to_log(emit[s][v]);
  }
  m.order = topological_order(m);
  m.validate();
  return m;
}

double log_sum_exp(std::span<const double> values) {
  double hi = kLogZero;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

double log_likelihood(const HmmModel& model, std::span<const int> symbols) {
  check_sequence(model, symbols);
  std::vector<double> alpha;
  return forward(model, symbols, alpha);
}

ViterbiPath viterbi(const HmmModel& model, std::span<const int> symbols) {
  check_sequence(model, symbols);
  const std::size_t S = model.num_states, T = symbols.size();
  // best[t * S + s]: best log-probability of c_{t+1}..c_T and the stop
  // transition given s_t = s. Tracing forward from the best first state and
  // always taking the lowest index that attains the maximum yields the
  // lexicographically smallest optimal path.
  std::vector<double> best(T * S, kLogZero);
  for (std::size_t s = 0; s < S; ++s)
    best[(T - 1) * S + s] = model.log_trans(s, model.stop());
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < S; ++i) {
      double m = kLogZero;
      for (std::size_t j = 0; j < S; ++j)
        m = std::max(m, model.log_trans(i, j) +
                            model.log_emit(j, symbols[t + 1]) +
                            best[(t + 1) * S + j]);
      best[t * S + i] = m;
    }
  }
  ViterbiPath path;
  path.states.resize(T);
  int arg = -1;
  for (std::size_t s = 0; s < S; ++s) {
    const double v = model.start[s] + model.log_emit(s, symbols[0]) + best[s];
    if (v > path.log_prob) {
      path.log_prob = v;
      arg = static_cast<int>(s);
    }
  }
  if (arg < 0) throw NumericError("unreachable sequence");
  path.states[0] = arg;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const int from = path.states[t];
    double top = kLogZero;
    int next = -1;
    for (std::size_t j = 0; j < S; ++j) {
      const double v = model.log_trans(from, j) +
                       model.log_emit(j, symbols[t + 1]) + best[(t + 1) * S + j];
      if (v > top) {
        top = v;
        next = static_cast<int>(j);
      }
    }
    path.states[t + 1] = next;
  }
  return path;
}

Posteriors forward_backward(const HmmModel& model,
                            std::span<const int> symbols) {
  check_sequence(model, symbols);
  const std::size_t S = model.num_states, T = symbols.size();
  std::vector<double> alpha, beta;
  Posteriors post;
  post.length = T;
  post.num_states = S;
  post.log_likelihood = forward(model, symbols, alpha);
  if (post.log_likelihood == kLogZero)
    throw NumericError("unreachable sequence");
  backward(model, symbols, beta);

  post.state.assign(T * S, 0.0);
  std::vector<double> terms(S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s)
      terms[s] = alpha[t * S + s] + beta[t * S + s];
    const double norm = log_sum_exp(terms);
    for (std::size_t s = 0; s < S; ++s)
      if (terms[s] != kLogZero) post.state[t * S + s] = std::exp(terms[s] - norm);
  }
  if (T > 1) {
    post.pair.assign((T - 1) * S * S, 0.0);
    std::vector<double> pair_terms(S * S);
    for (std::size_t t = 0; t + 1 < T; ++t) {
      for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j)
          pair_terms[i * S + j] = alpha[t * S + i] + model.log_trans(i, j) +
                                  model.log_emit(j, symbols[t + 1]) +
                                  beta[(t + 1) * S + j];
      const double norm = log_sum_exp(pair_terms);
      for (std::size_t x = 0; x < S * S; ++x)
        if (pair_terms[x] != kLogZero)
          post.pair[t * S * S + x] = std::exp(pair_terms[x] - norm);
    }
  }
  return post;
}

double corpus_log_likelihood(const HmmModel& model,
                             const std::vector<std::vector<int>>& corpus,
                             unsigned threads) {
  for (const auto& seq : corpus) check_sequence(model, seq);
  try {
    return expected_counts(model, corpus, threads, false).log_likelihood;
  } catch (const NumericError&) {
    return kLogZero;
  }
}

EmResult em_train(const HmmModel& model,
                  const std::vector<std::vector<int>>& corpus,
                  const EmConfig& config) {
  if (corpus.empty()) throw DataError("EM: empty corpus");
  if (config.max_iter <= 0) throw DataError("EM: max_iter must be positive");
  if (!(config.rel_tol > 0.0)) throw DataError("EM: rel_tol must be positive");
  if (!(config.smoothing_eps >= 0.0))
    throw DataError("EM: smoothing_eps must be non-negative");
  for (const auto& seq : corpus) check_sequence(model, seq);

  EmResult result{model, {}};
  double previous = kLogZero;
  for (int iter = 0;; ++iter) {
    const Counts counts =
        expected_counts(result.model, corpus, config.threads, true);
    const double ll = counts.log_likelihood;
    result.trace.log_likelihood.push_back(ll);
    if (iter > 0) {
      const double scale =
          std::max(std::abs(previous), std::numeric_limits<double>::min());
      if ((ll - previous) / scale < config.rel_tol) {
        result.trace.converged = true;
        break;
      }
    }
    if (iter == config.max_iter) break;
    result.model = maximize(result.model, counts, config.smoothing_eps);
    ++result.trace.iterations;
    previous = ll;
  }
  return result;
}

HmmSample sample(const HmmModel& model, Rng& rng, std::size_t max_len) {
  if (max_len == 0) throw DataError("sample: max_len must be positive");
  const std::size_t S = model.num_states, V = model.alphabet_size;
  std::vector<double> weights;
  auto draw = [&](std::span<const double> logs) {
    weights.resize(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) weights[i] = std::exp(logs[i]);
    return rng.categorical(weights);
  };
  HmmSample out;
  std::size_t state = draw(model.start);
  while (out.symbols.size() < max_len) {
    out.states.push_back(static_cast<int>(state));
    out.symbols.push_back(static_cast<int>(draw({model.emit.data() + state * V, V})));
    const std::size_t next = draw(model.trans_row(state));
    if (next == S) {
      out.stopped = true;
      break;
    }
    state = next;
  }
  return out;
}

HmmSample sample(const HmmModel& model, std::uint64_t seed,
                 std::size_t max_len) {
  Rng rng(seed);
  return sample(model, rng, max_len);
}

double emission_entropy(const HmmModel& model, std::size_t state) {
  if (state >= model.num_states)
    throw DataError("state " + std::to_string(state) + " out of range");
  double h = 0.0;
  for (double l : model.emit_row(state))
    if (l != kLogZero) h -= std::exp(l) * l;
  return std::max(h, 0.0);
}

std::string format_model(const HmmModel& model) {
  std::string out = "convstruct-hmm 1\n";
  out += "states " + std::to_string(model.num_states) + "\n";
  out += "alphabet " + std::to_string(model.alphabet_size) + "\n";
  out += "order";
  for (int s : model.order) out += " " + std::to_string(s);
  out += "\nstart";
  for (double l : model.start) out += " " + format_probability(l);
  out += '\n';
  for (std::size_t s = 0; s < model.num_states; ++s) {
    out += "trans";
    for (double l : model.trans_row(s)) out += " " + format_probability(l);
    out += '\n';
  }
  for (std::size_t s = 0; s < model.num_states; ++s) {
    out += "emit";
    for (double l : model.emit_row(s)) out += " " + format_probability(l);
    out += '\n';
  }
  return out;
}

HmmModel parse_model(std::string_view contents) {
  text::LineCursor in(text::split_lines(contents), "model");
  const auto& header = in.expect("convstruct-hmm");
  if (header.words[1] != "1")
    text::fail(in.what(), header.number, "unsupported version");
  const auto& sl = in.expect("states");
  const auto S = text::parse_uint(sl.words[1], in.what(), sl.number);
  const auto& al = in.expect("alphabet");
  const auto V = text::parse_uint(al.words[1], in.what(), al.number);
  if (S == 0 || V == 0)
    text::fail(in.what(), sl.number, "states and alphabet must be positive");
  HmmModel m = HmmModel::empty(S, V);

  auto read_values = [&](std::string_view key, std::size_t count,
                         double* dst) {
    const auto& line = in.expect(key, 1);
    if (line.words.size() != count + 1)
      text::fail(in.what(), line.number,
                 "'" + std::string(key) + "' needs " + std::to_string(count) +
                     " values");
    for (std::size_t i = 0; i < count; ++i) {
      const std::string_view w = line.words[i + 1];
      if (w == "zero") {
        dst[i] = kLogZero;
        continue;
      }
      const double p = text::parse_double(w, in.what(), line.number);
      if (p < 0.0 || p > 1.0 + 1e-12)
        text::fail(in.what(), line.number, "probability out of range");
      dst[i] = p > 0.0 ? std::log(std::min(p, 1.0)) : kLogZero;
    }
  };
  const auto& ol = in.expect("order", S + 1);
  if (ol.words.size() != S + 1)
    text::fail(in.what(), ol.number, "order needs one entry per state");
  for (std::size_t k = 0; k < S; ++k)
    m.order[k] = static_cast<int>(
        text::parse_int(ol.words[k + 1], in.what(), ol.number));
  read_values("start", S, m.start.data());
  for (std::size_t s = 0; s < S; ++s)
    read_values("trans", S + 1, m.trans.data() + s * (S + 1));
  for (std::size_t s = 0; s < S; ++s)
    read_values("emit", V, m.emit.data() + s * V);
  if (!in.done()) text::fail(in.what(), in.peek().number, "trailing content");
  m.validate();
  return m;
}

void save_model(const HmmModel& model, const std::filesystem::path& path) {
  write_file(path, format_model(model));
}

HmmModel load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace convstruct
