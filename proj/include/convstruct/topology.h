// convstruct/topology.h
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

#ifndef CONVSTRUCT_TOPOLOGY_H_
#define CONVSTRUCT_TOPOLOGY_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "convstruct/hmm.h"

// Left-to-right topology induction by successive state splitting. A new
// state created by a split always gets the next free index, so the indices
// of existing states never change; `HmmModel::order` tracks where the new
// state sits in the flow.
namespace convstruct {

enum class SplitKind { kTemporal, kContextual };

std::string_view split_kind_name(SplitKind kind);

struct SplitRecord {
  int iteration = 0;
  int parent = 0;
  SplitKind chosen = SplitKind::kTemporal;
  double loglik_temporal = 0.0;
  double loglik_contextual = 0.0;
  std::size_t states_after = 0;

  bool operator==(const SplitRecord&) const = default;
};

struct SplitHistory {
  std::vector<SplitRecord> records;
  double initial_loglik = 0.0;
  double final_loglik = 0.0;

  bool operator==(const SplitHistory&) const = default;
};

// Three-state chain 0 -> 1 -> 2 -> stop expecting 15% / 70% / 15% of
// mean_length turns in each state. A state's self-loop is 1 - 1/d for an
// expected duration d, clamped at zero (a structural zero). Emissions are
// uniform with a seeded relative perturbation of at most 1e-3.
HmmModel init_three_state(double mean_length, std::size_t alphabet_size,
                          std::uint64_t seed);

// State with the highest emission entropy, lowest index on ties.
std::size_t select_split_state(const HmmModel& model);

// Sequential split: the new state takes over every incoming edge of parent
// (and its start mass) and precedes it. With x the parent's self-loop, the
// new state gets a self-loop and an edge into parent of x/2 each, plus a copy
// of the parent's other outgoing edges and its emissions.
HmmModel temporal_split(const HmmModel& model, std::size_t parent);

// Parallel split: the new state shares parent's predecessors and successors.
// Each predecessor edge into parent is duplicated onto the new state and the
// predecessor's row renormalized. The new state's emissions are the parent's
// with the most likely symbol removed.
HmmModel contextual_split(const HmmModel& model, std::size_t parent);

struct TopologyResult {
  HmmModel model;
  SplitHistory history;
};

struct TopologyOptions {
  std::size_t target_states = 3;
  EmConfig em;
  std::uint64_t seed = 0;
  // 0 infers max symbol + 1 from the corpus.
  std::size_t alphabet_size = 0;
  // Called after every accepted split.
  std::function<void(const SplitRecord&)> on_split;
};

// Initializes a three-state chain, trains it, then repeatedly splits the
// highest-entropy state both ways, trains both candidates and keeps the one
// with the higher corpus log-likelihood (the temporal one on an exact tie)
// until the model has target_states states.
TopologyResult learn_topology(const std::vector<std::vector<int>>& corpus,
                              const TopologyOptions& options);

std::string format_history(const SplitHistory& history);
SplitHistory parse_history(std::string_view contents);
void save_history(const SplitHistory& history,
                  const std::filesystem::path& path);
SplitHistory load_history(const std::filesystem::path& path);

}  // namespace convstruct

#endif  // CONVSTRUCT_TOPOLOGY_H_
