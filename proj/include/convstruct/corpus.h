// convstruct/corpus.h
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

#ifndef CONVSTRUCT_CORPUS_H_
#define CONVSTRUCT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace convstruct {

enum class Role { kAgent, kUser };

std::string_view role_name(Role role);
// Accepts "agent" or "user"; throws DataError otherwise.
Role parse_role(std::string_view name);

struct Turn {
  Role role = Role::kAgent;
  std::optional<std::string> text;
  std::optional<std::vector<float>> embedding;
  // Global dialogue-act index, agent clusters first.
  std::optional<int> cluster;
  // Decoded sub-dialogue state.
  std::optional<int> state;

  bool operator==(const Turn&) const = default;
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
  std::map<std::string, std::string> labels;

  bool operator==(const Conversation&) const = default;
};

struct ConversationCorpus {
  std::vector<Conversation> conversations;
  std::optional<std::size_t> embedding_dim;
  // Dialogue-act alphabet size; set once turns are discretized. Not stored
  // in conversation files.
  std::optional<std::size_t> alphabet_size;

  std::size_t num_turns() const;
  // Index of the conversation with this id, if any.
  std::optional<std::size_t> find(std::string_view id) const;

  bool operator==(const ConversationCorpus&) const = default;
};

// Row-major float32 matrix with one (conversation id, turn index) key per
// row. This is the exchange format for externally computed embeddings.
struct EmbeddingMatrix {
  std::uint32_t rows = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;
  std::vector<std::pair<std::string, std::uint32_t>> index;

  const float* row(std::size_t r) const { return data.data() + r * dim; }
  bool operator==(const EmbeddingMatrix&) const = default;
};

// Reads one JSON conversation record per line. Blank lines are skipped.
// With expect_embeddings, every turn must carry an inline embedding.
ConversationCorpus load_conversations(const std::filesystem::path& path,
                                      bool expect_embeddings = false);

// Same grammar, from an in-memory buffer.
ConversationCorpus parse_conversations(std::string_view contents,
                                       bool expect_embeddings = false);

ConversationCorpus attach_embeddings(ConversationCorpus corpus,
                                     const EmbeddingMatrix& matrix);

// Writes every field present, including "cluster" and "state". At least one
// turn must carry one of them.
void write_annotated(const ConversationCorpus& corpus,
                     const std::filesystem::path& path);
std::string format_conversations(const ConversationCorpus& corpus);

EmbeddingMatrix read_embedding_matrix(const std::filesystem::path& path);
EmbeddingMatrix decode_embedding_matrix(std::string_view bytes);
std::string encode_embedding_matrix(const EmbeddingMatrix& matrix);
void write_embedding_matrix(const EmbeddingMatrix& matrix,
                            const std::filesystem::path& path);

// Whole-file helpers shared by the readers and writers in this library.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace convstruct

#endif  // CONVSTRUCT_CORPUS_H_
