// convstruct/analytics.h
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

#ifndef CONVSTRUCT_ANALYTICS_H_
#define CONVSTRUCT_ANALYTICS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "convstruct/corpus.h"
#include "convstruct/hmm.h"
#include "convstruct/vq.h"

namespace convstruct {

struct DecodedConversation {
  std::string id;
  std::vector<int> states;
  double log_prob = 0.0;

  bool operator==(const DecodedConversation&) const = default;
};

struct DecodeFailure {
  std::string id;
  std::string reason;
};

struct DecodeResult {
  std::vector<DecodedConversation> decoded;
  std::vector<DecodeFailure> failures;
};

// Viterbi paths in input order. Conversations the model cannot produce are
// listed in `failures` and left out of `decoded`.
DecodeResult decode_corpus(const HmmModel& model,
                           const std::vector<DiscretizedConversation>& input,
                           unsigned threads = 1);

// Writes decoded states into the matching turns (by conversation id).
ConversationCorpus annotate_states(
    ConversationCorpus corpus, const std::vector<DecodedConversation>& decoded);

// Decoded sequences read back from the "state" field of every turn.
std::vector<DecodedConversation> decoded_from_states(
    const ConversationCorpus& corpus);

// A state sequence with consecutive repeats merged.
using Path = std::vector<int>;

Path extract_path(std::span<const int> states);

// "S1-S2-S8"
std::string format_path(const Path& path);

struct PathEntry {
  Path path;
  std::size_t count = 0;
  std::map<std::string, std::size_t> labels;
};

struct PathStats {
  // Descending count, then lexicographic path.
  std::vector<PathEntry> entries;
  std::size_t total = 0;
  std::string label_name;
  std::vector<std::string> warnings;

  double frequency(std::size_t entry) const {
    return total == 0 ? 0.0
                      : static_cast<double>(entries[entry].count) /
                            static_cast<double>(total);
  }
};

PathStats path_statistics(const std::vector<DecodedConversation>& decoded,
                          const ConversationCorpus& corpus,
                          const std::string& label_name);

using NgramCounts = std::map<std::vector<int>, std::size_t>;

// Sliding windows over one state sequence, optionally collapsed first.
NgramCounts ngram_bag(std::span<const int> states, std::size_t n,
                      bool collapse);

NgramCounts state_ngrams(const std::vector<DecodedConversation>& decoded,
                         std::size_t n, bool collapse);

// Maximum-weight assignment of rows to columns of a non-negative matrix
// (Hungarian algorithm). Entry r is the column matched to row r, or -1 when
// there are more rows than columns and row r is left out.
std::vector<int> max_weight_assignment(
    const std::vector<std::vector<double>>& weights);

struct PathAlignment {
  struct Row {
    Path path;
    std::size_t count = 0;
    std::optional<std::string> label;  // unset: unmatched
    std::size_t matched = 0;
    std::map<std::string, std::size_t> distribution;
  };
  std::vector<Row> rows;
  std::vector<std::string> labels;
  std::size_t total_matched = 0;
  std::vector<std::string> warnings;
};

// One-to-one assignment of the top_k most frequent paths to label values
// maximizing the total matched count.
PathAlignment align_paths_to_labels(const PathStats& stats, std::size_t top_k);

enum class UnitKind { kCluster, kState };

struct SummaryUnit {
  UnitKind kind = UnitKind::kCluster;
  int id = 0;
  // Only used for states: members are restricted to this role.
  Role role = Role::kAgent;
};

struct Representative {
  std::string conversation_id;
  std::size_t turn = 0;
  std::string text;
  double distance = 0.0;

  bool operator==(const Representative&) const = default;
};

// The m member turns nearest to the mean member embedding, ties broken by
// (conversation id, turn index). Cluster membership uses the turn's cluster
// field, or the codebooks when it is absent.
std::vector<Representative> representatives(
    const ConversationCorpus& corpus,
    const std::vector<DecodedConversation>& decoded,
    const RoleCodebooks& codebooks, const SummaryUnit& unit, std::size_t m);

// One line per element of the path, taken from state_lines.
std::vector<std::string> summary_view(
    const Path& path, const std::map<int, std::string>& state_lines);

struct TopologyExportOptions {
  double prune_threshold = 0.01;
  bool include_state_summaries = true;
  std::size_t max_representatives = 1;
};

// Edge key (from, to) with from = -1 for START and to = num_states for STOP,
// mapped to the most common label among conversations traversing the edge.
using EdgeLabels = std::map<std::pair<int, int>, std::string>;

EdgeLabels dominant_edge_labels(const std::vector<DecodedConversation>& decoded,
                                const ConversationCorpus& corpus,
                                const std::string& label_name,
                                std::size_t num_states);

// Graphviz text. Edges below prune_threshold and structural zeros are left
// out; pen width grows linearly from 1 to 5 over [prune_threshold, 1].
std::string export_dot(const HmmModel& model,
                       const TopologyExportOptions& options,
                       const std::map<int, std::string>* summaries = nullptr,
                       const EdgeLabels* edge_labels = nullptr);

struct StructureFeatures {
  std::string id;
  std::vector<int> clusters;
  std::vector<int> states;
  Path path;

  bool operator==(const StructureFeatures&) const = default;
};

std::vector<StructureFeatures> structure_features(
    const std::vector<DecodedConversation>& decoded,
    const std::vector<DiscretizedConversation>& discretized);

std::string format_structure_features(
    const std::vector<StructureFeatures>& features);
std::vector<StructureFeatures> parse_structure_features(
    std::string_view contents);

void export_structure_features(
    const std::vector<DecodedConversation>& decoded,
    const std::vector<DiscretizedConversation>& discretized,
    const std::filesystem::path& path);
std::vector<StructureFeatures> read_structure_features(
    const std::filesystem::path& path);

struct LabeledBag {
  NgramCounts features;
  std::string label;
};

// Multinomial naive Bayes with add-one smoothing over n-gram counts.
// Features never seen in training are ignored at prediction time.
class NaiveBayes {
 public:
  // Throws DataError for an empty training set.
  void fit(const std::vector<LabeledBag>& train);
  // Highest posterior label; ties go to the lexicographically smallest.
  std::string predict(const NgramCounts& features) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::vector<double> log_prior_;
  std::vector<double> log_unseen_;  // per label, for features absent in it
  std::map<std::vector<int>, std::vector<double>> log_likelihood_;
};

// Accuracy of NaiveBayes on test after fitting on train. Every feature key
// must be an n-gram.
double ngram_baseline(const std::vector<LabeledBag>& train,
                      const std::vector<LabeledBag>& test, std::size_t n);

// Accuracy of always predicting the most frequent training label (ties:
// lexicographically smallest).
double majority_baseline(const std::vector<LabeledBag>& train,
                         const std::vector<LabeledBag>& test);

}  // namespace convstruct

#endif  // CONVSTRUCT_ANALYTICS_H_
