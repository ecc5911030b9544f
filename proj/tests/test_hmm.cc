// test_hmm.cc
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

#include <cmath>
#include <random>

#include "convstruct/error.h"
#include "convstruct/hmm.h"
#include "doctest.h"
#include "oracles.h"

using namespace convstruct;

namespace {

// 0 -> 1 -> 2 -> stop, no self-loops, state i always emits symbol i.
HmmModel strict_chain() {
  return model_from_probabilities(
      {1, 0, 0}, {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}},
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
}

HmmModel three_chain() {
  return model_from_probabilities(
      {1, 0, 0},
      {{0.7, 0.3, 0, 0}, {0, 0.8, 0.2, 0}, {0, 0, 0.6, 0.4}},
      {{0.7, 0.2, 0.1, 0.0}, {0.1, 0.6, 0.2, 0.1}, {0.05, 0.05, 0.2, 0.7}});
}

// Identity order, every forward edge, self-loop and stop edge allowed.
HmmModel dense_model(std::mt19937_64& rng, std::size_t S, std::size_t V) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> start(S, 0.0);
  std::vector<std::vector<double>> trans(S, std::vector<double>(S + 1, 0.0));
  std::vector<std::vector<double>> emit(S, std::vector<double>(V));
  auto normalize = [](std::vector<double>& r) {
    double z = 0;
    for (double x : r) z += x;
    for (double& x : r) x /= z;
  };
  for (std::size_t i = 0; i < S; ++i) {
    start[i] = u(rng);
    for (std::size_t j = i; j <= S; ++j) trans[i][j] = u(rng);
    for (double& x : emit[i]) x = u(rng);
    normalize(trans[i]);
    normalize(emit[i]);
  }
  normalize(start);
  return model_from_probabilities(start, trans, emit);
}

}  // namespace

TEST_CASE("log-sum-exp") {
  CHECK(log_sum_exp(std::vector<double>{}) == kLogZero);
  CHECK(log_sum_exp(std::vector<double>{kLogZero, kLogZero}) == kLogZero);
  CHECK(log_sum_exp(std::vector<double>{std::log(0.25), std::log(0.75)}) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(log_sum_exp(std::vector<double>{-1000.0, -1000.0}) ==
        doctest::Approx(-1000.0 + std::log(2.0)));
}

TEST_CASE("closed-form likelihoods") {
  const auto one = model_from_probabilities({1}, {{0.5, 0.5}}, {{0.5, 0.5}});
  CHECK(log_likelihood(one, std::vector<int>{0, 1}) ==
        doctest::Approx(std::log(0.0625)).epsilon(1e-15));
  const auto chain = strict_chain();
  CHECK(log_likelihood(chain, std::vector<int>{0, 1, 2}) == 0.0);
  CHECK(log_likelihood(chain, std::vector<int>{0, 1}) == kLogZero);
  const auto path = viterbi(chain, std::vector<int>{0, 1, 2});
  CHECK(path.states == std::vector<int>{0, 1, 2});
  CHECK(path.log_prob == 0.0);
  const auto post = forward_backward(chain, std::vector<int>{0, 1, 2});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t s = 0; s < 3; ++s) CHECK(post.state_at(t, s) == (s == t ? 1.0 : 0.0));
  const auto single = forward_backward(one, std::vector<int>{1, 0, 0});
  for (double p : single.state) CHECK(p == 1.0);
}

TEST_CASE("input errors") {
  const auto chain = strict_chain();
  CHECK_THROWS_AS(log_likelihood(chain, std::vector<int>{}), DataError);
  CHECK_THROWS_AS(log_likelihood(chain, std::vector<int>{0, 3}), DataError);
  CHECK_THROWS_AS(log_likelihood(chain, std::vector<int>{0, -1}), DataError);
  CHECK_THROWS_WITH_AS(viterbi(chain, std::vector<int>{2, 1, 0}),
                       doctest::Contains("unreachable"), NumericError);
  CHECK_THROWS_AS(forward_backward(chain, std::vector<int>{1}), NumericError);
}

TEST_CASE("exhaustive enumeration agrees") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t S = 1 + trial % 4, V = 2 + trial % 5;
    const HmmModel m = oracle::random_model(rng, S, V);
    m.validate();
    const auto seq = oracle::reachable_sequence(m, rng, 1 + trial % 6);
    if (seq.empty()) continue;
    ++checked;
    const auto e = oracle::enumerate(m, seq);
    CHECK(oracle::close_rel(log_likelihood(m, seq), std::log(e.total), 1e-10));
    const auto vit = viterbi(m, seq);
    CHECK(vit.states == e.best_path);
    CHECK(oracle::close_rel(vit.log_prob, std::log(e.best), 1e-10));
    const auto post = forward_backward(m, seq);
    CHECK(post.log_likelihood == log_likelihood(m, seq));
    for (std::size_t i = 0; i < e.state.size(); ++i)
      CHECK(oracle::close_rel(post.state[i], e.state[i], 1e-10));
    for (std::size_t i = 0; i < e.pair.size(); ++i)
      CHECK(oracle::close_rel(post.pair[i], e.pair[i], 1e-10));
  }
  CHECK(checked >= 50);
}

TEST_CASE("exact ties prefer the lexicographically smallest path") {
  // Two symmetric branches 0 and 1 into state 2.
  const auto m = model_from_probabilities(
      {0.5, 0.5, 0},
      {{0, 0, 1, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}},
      {{1, 0}, {1, 0}, {0, 1}});
  CHECK(viterbi(m, std::vector<int>{0, 1}).states == std::vector<int>{0, 2});
  // Tie at the second position after a shared first state.
  const auto fork = model_from_probabilities(
      {1, 0, 0, 0},
      {{0, 0.5, 0.5, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 0, 1}},
      {{1, 0}, {0, 1}, {0, 1}, {1, 0}});
  CHECK(viterbi(fork, std::vector<int>{0, 1, 0}).states == std::vector<int>{0, 1, 3});
}

TEST_CASE("model validation") {
  auto m = three_chain();
  CHECK_NOTHROW(m.validate());
  CHECK(m.order == std::vector<int>{0, 1, 2});
  auto bad_row = m;
  bad_row.log_trans(0, 0) = std::log(0.5);
  CHECK_THROWS_AS(bad_row.validate(), DataError);
  CHECK_THROWS_AS(model_from_probabilities(
                      {1, 0}, {{0, 1, 0}, {1, 0, 0}}, {{1}, {1}}),
                  DataError);
  auto bad_order = m;
  bad_order.order = {1, 0, 2};
  CHECK_THROWS_AS(bad_order.validate(), DataError);
  const auto rev = model_from_probabilities(
      {0, 0, 1}, {{0, 0, 0, 1}, {1, 0, 0, 0}, {0, 1, 0, 0}}, {{1}, {1}, {1}});
  CHECK(rev.order == std::vector<int>{2, 1, 0});
}

TEST_CASE("model files round trip with explicit structural zeros") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto m = oracle::random_model(rng, 1 + i % 5, 2 + i % 4);
    const std::string text = format_model(m);
    CHECK(parse_model(text) == m);
  }
  const std::string text = format_model(strict_chain());
  CHECK(text.rfind("convstruct-hmm 1\n", 0) == 0);
  CHECK(text.find("trans zero 1 zero zero") != std::string::npos);
  CHECK_THROWS_AS(parse_model("convstruct-hmm 1\nstates 2\n"), DataError);
}

TEST_CASE("emission entropy") {
  const auto m = model_from_probabilities(
      {1, 0, 0}, {{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}},
      {{0, 0, 1, 0}, {0.25, 0.25, 0.25, 0.25}, {0.5, 0.3, 0.2, 0}});
  CHECK(emission_entropy(m, 0) == 0.0);
  CHECK(emission_entropy(m, 1) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  const double direct = -(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2));
  CHECK(emission_entropy(m, 2) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(emission_entropy(m, 2) == doctest::Approx(1.029653).epsilon(1e-6));
  CHECK_THROWS_AS(emission_entropy(m, 3), DataError);
}

TEST_CASE("sampling") {
  const auto once = model_from_probabilities({1}, {{0, 1}}, {{0.3, 0.7}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = sample(once, seed, 10);
    CHECK(s.symbols.size() == 1);
    CHECK(s.stopped);
  }
  const auto chain = strict_chain();
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(sample(chain, seed, 10).states == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(sample(chain, 1, 0), DataError);
  CHECK(sample(three_chain(), 5, 100).symbols == sample(three_chain(), 5, 100).symbols);
  CHECK_FALSE(sample(model_from_probabilities({1}, {{0.99, 0.01}}, {{1}}), 1, 3).stopped);

  // Expected visits: v0 = pi0 / (1 - a00), v1 = (pi1 + v0 a01) / (1 - a11).
  const double a00 = 0.6, a01 = 0.3, a11 = 0.5, pi0 = 0.8;
  const std::vector<double> e0 = {0.5, 0.4, 0.1}, e1 = {0.1, 0.2, 0.7};
  const auto two = model_from_probabilities(
      {pi0, 1 - pi0}, {{a00, a01, 1 - a00 - a01}, {0, a11, 1 - a11}}, {e0, e1});
  const double v0 = pi0 / (1 - a00), v1 = ((1 - pi0) + v0 * a01) / (1 - a11);
  std::vector<double> counts(3, 0.0);
  double total = 0;
  Rng rng(77);
  for (int i = 0; i < 100000; ++i) {
    const auto s = sample(two, rng, 1000);
    for (int v : s.symbols) counts[v] += 1;
    total += static_cast<double>(s.symbols.size());
  }
  for (int v = 0; v < 3; ++v) {
    const double analytic = (v0 * e0[v] + v1 * e1[v]) / (v0 + v1);
    CHECK(std::abs(counts[v] / total - analytic) < 0.01);
  }
}

TEST_CASE("EM on a fixed topology") {
  const HmmModel truth = three_chain();
  std::vector<std::vector<int>> corpus;
  Rng rng(11);
  while (corpus.size() < 500) {
    const auto s = sample(truth, rng, 400);
    if (s.stopped) corpus.push_back(s.symbols);
  }

  SUBCASE("recovers a known chain from a perturbed start") {
    const auto init = model_from_probabilities(
        {1, 0, 0},
        {{0.5, 0.5, 0, 0}, {0, 0.6, 0.4, 0}, {0, 0, 0.5, 0.5}},
        {{0.4, 0.3, 0.2, 0.1}, {0.2, 0.4, 0.2, 0.2}, {0.1, 0.2, 0.3, 0.4}});
    EmConfig cfg;
    cfg.max_iter = 300;
    cfg.rel_tol = 1e-10;
    const auto res = em_train(init, corpus, cfg);
    res.model.validate();
    for (std::size_t i = 1; i < res.trace.log_likelihood.size(); ++i)
      CHECK(res.trace.log_likelihood[i] >= res.trace.log_likelihood[i - 1] - 1e-8);
    const oracle::Linear got(res.model), want(truth);
    for (std::size_t i = 0; i < got.trans.size(); ++i)
      CHECK(std::abs(got.trans[i] - want.trans[i]) < 0.05);
    for (std::size_t i = 0; i < got.emit.size(); ++i)
      CHECK(std::abs(got.emit[i] - want.emit[i]) < 0.05);
    for (std::size_t i = 0; i < init.trans.size(); ++i)
      CHECK((init.trans[i] == kLogZero) == (res.model.trans[i] == kLogZero));
  }

  SUBCASE("thread count does not change a single bit") {
    EmConfig cfg;
    cfg.max_iter = 5;
    const auto a = em_train(truth, corpus, cfg);
    cfg.threads = 3;
    const auto b = em_train(truth, corpus, cfg);
    cfg.threads = 8;
    const auto c = em_train(truth, corpus, cfg);
    CHECK(a.model == b.model);
    CHECK(a.model == c.model);
    CHECK(a.trace.log_likelihood == c.trace.log_likelihood);
    CHECK(corpus_log_likelihood(truth, corpus, 1) ==
          corpus_log_likelihood(truth, corpus, 6));
  }

  SUBCASE("errors") {
    EmConfig cfg;
    CHECK_THROWS_AS(em_train(truth, {}, cfg), DataError);
    CHECK_THROWS_AS(em_train(strict_chain(), {{2, 1, 0}}, cfg), NumericError);
    cfg.rel_tol = 0;
    CHECK_THROWS_AS(em_train(truth, corpus, cfg), DataError);
  }
}

TEST_CASE("a stationary point stays put") {
  const auto chain = strict_chain();
  const std::vector<std::vector<int>> corpus(10, {0, 1, 2});
  EmConfig cfg;
  cfg.smoothing_eps = 0.0;
  const auto res = em_train(chain, corpus, cfg);
  CHECK(res.trace.converged);
  CHECK(res.trace.iterations == 1);
  REQUIRE(res.trace.log_likelihood.size() == 2);
  const oracle::Linear a(chain), b(res.model);
  for (std::size_t i = 0; i < a.trans.size(); ++i)
    CHECK(std::abs(a.trans[i] - b.trans[i]) <= 1e-12);
  for (std::size_t i = 0; i < a.emit.size(); ++i)
    CHECK(std::abs(a.emit[i] - b.emit[i]) <= 1e-12);
}

TEST_CASE("EM log-likelihood never decreases on random models") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const HmmModel gen = oracle::random_model(rng, 4, 6, 0.6, 0.0);
    std::vector<std::vector<int>> corpus;
    Rng srng(trial);
    while (corpus.size() < 60) {
      const auto s = sample(gen, srng, 50);
      if (s.stopped) corpus.push_back(s.symbols);
    }
    const HmmModel init = dense_model(rng, 4, 6);
    EmConfig cfg;
    cfg.max_iter = 40;
    cfg.rel_tol = 1e-12;
    cfg.smoothing_eps = 0.0;
    const auto res = em_train(init, corpus, cfg);
    for (std::size_t i = 1; i < res.trace.log_likelihood.size(); ++i)
      CHECK(res.trace.log_likelihood[i] >= res.trace.log_likelihood[i - 1] - 1e-8);
    res.model.validate();
  }
}
