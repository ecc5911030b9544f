// convstruct/hmm.h
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

#ifndef CONVSTRUCT_HMM_H_
#define CONVSTRUCT_HMM_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convstruct/random.h"

namespace convstruct {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Discrete-observation HMM with a non-emitting stop state. All parameters
// are natural-log probabilities; kLogZero marks a structural zero.
//
// trans has num_states rows and num_states + 1 columns. Column num_states
// is the stop state: it is entered after the last emission and has no row
// of its own. Ignoring self-loops, the finite edges of trans form a DAG and
// `order` lists the states in a topological order of it.
struct HmmModel {
  std::size_t num_states = 0;
  std::size_t alphabet_size = 0;
  std::vector<double> start;
  std::vector<double> trans;
  std::vector<double> emit;
  std::vector<int> order;

  // All-zero model of the given shape with the identity order.
  static HmmModel empty(std::size_t num_states, std::size_t alphabet_size);

  std::size_t stop() const { return num_states; }
  std::size_t trans_cols() const { return num_states + 1; }

  double log_trans(std::size_t from, std::size_t to) const {
    return trans[from * trans_cols() + to];
  }
  double& log_trans(std::size_t from, std::size_t to) {
    return trans[from * trans_cols() + to];
  }
  double log_emit(std::size_t state, std::size_t symbol) const {
    return emit[state * alphabet_size + symbol];
  }
  double& log_emit(std::size_t state, std::size_t symbol) {
    return emit[state * alphabet_size + symbol];
  }
  std::span<const double> trans_row(std::size_t state) const {
    return {trans.data() + state * trans_cols(), trans_cols()};
  }
  std::span<const double> emit_row(std::size_t state) const {
    return {emit.data() + state * alphabet_size, alphabet_size};
  }

  // Throws DataError naming the first violated invariant: shapes, each
  // distribution summing to 1 within tol, and the left-to-right order.
  void validate(double tol = 1e-9) const;

  bool operator==(const HmmModel&) const = default;
};

// Builds a model from linear probabilities (0 becomes a structural zero)
// and derives `order`. trans rows carry num_states + 1 entries.
HmmModel model_from_probabilities(
    const std::vector<double>& start,
    const std::vector<std::vector<double>>& trans,
    const std::vector<std::vector<double>>& emit);

// Lowest-index-first topological order of the self-loop-free transition
// graph. Throws DataError if that graph has a cycle.
std::vector<int> topological_order(const HmmModel& model);

// Numerically stable log(sum(exp(values))); kLogZero for an empty or
// all-zero input.
double log_sum_exp(std::span<const double> values);

// Exact log marginal likelihood, including the final stop transition.
// Returns kLogZero for a sequence the model cannot produce.
double log_likelihood(const HmmModel& model, std::span<const int> symbols);

struct ViterbiPath {
  std::vector<int> states;
  double log_prob = kLogZero;
};

// Most likely state sequence. Among exactly tied optimal paths the
// lexicographically smallest is returned. Throws NumericError for a
// sequence of probability zero.
ViterbiPath viterbi(const HmmModel& model, std::span<const int> symbols);

struct Posteriors {
  std::size_t length = 0;
  std::size_t num_states = 0;
  std::vector<double> state;  // length x num_states
  std::vector<double> pair;   // (length - 1) x num_states x num_states
  double log_likelihood = kLogZero;

  double state_at(std::size_t t, std::size_t s) const {
    return state[t * num_states + s];
  }
  // P(s_t = from, s_{t+1} = to | symbols)
  double pair_at(std::size_t t, std::size_t from, std::size_t to) const {
    return pair[(t * num_states + from) * num_states + to];
  }
};

// Throws NumericError for an unreachable sequence.
Posteriors forward_backward(const HmmModel& model,
                            std::span<const int> symbols);

struct EmConfig {
  int max_iter = 50;
  // Stop when (ll - previous) / |previous| falls below this.
  double rel_tol = 1e-4;
  // Added to every emission count and every allowed transition/start count.
  double smoothing_eps = 1e-6;
  // Worker threads for the E-step; results do not depend on it.
  unsigned threads = 1;
};

struct EmTrace {
  // Corpus log-likelihood of the initial model and after each update.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

struct EmResult {
  HmmModel model;
  EmTrace trace;
};

double corpus_log_likelihood(const HmmModel& model,
                             const std::vector<std::vector<int>>& corpus,
                             unsigned threads = 1);

// Baum-Welch on a fixed topology. Structural zeros in start and trans stay
// zero. Throws DataError for an empty corpus or bad config, NumericError
// when a sequence is unreachable under the initial model.
EmResult em_train(const HmmModel& model,
                  const std::vector<std::vector<int>>& corpus,
                  const EmConfig& config);

struct HmmSample {
  std::vector<int> symbols;
  std::vector<int> states;
  // False when max_len cut the sequence before the stop state.
  bool stopped = false;
};

HmmSample sample(const HmmModel& model, Rng& rng, std::size_t max_len);
HmmSample sample(const HmmModel& model, std::uint64_t seed,
                 std::size_t max_len);

// Shannon entropy in nats of a state's emission distribution.
double emission_entropy(const HmmModel& model, std::size_t state);

std::string format_model(const HmmModel& model);
HmmModel parse_model(std::string_view contents);
void save_model(const HmmModel& model, const std::filesystem::path& path);
HmmModel load_model(const std::filesystem::path& path);

}  // namespace convstruct

#endif  // CONVSTRUCT_HMM_H_
