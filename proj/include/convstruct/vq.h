// convstruct/vq.h
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

#ifndef CONVSTRUCT_VQ_H_
#define CONVSTRUCT_VQ_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convstruct/corpus.h"

namespace convstruct {

// Dense row-major matrix of doubles; every row has the same width.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t cols) : cols_(cols) {}
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  // Throws DataError when the rows disagree in width.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

  void push_back(std::span<const double> values);
  void push_back(std::span<const float> values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Codebook {
  Role role = Role::kAgent;
  std::uint64_t seed = 0;
  Matrix centroids;  // k rows of dim values

  std::size_t k() const { return centroids.rows(); }
  std::size_t dim() const { return centroids.cols(); }

  bool operator==(const Codebook&) const = default;
};

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  int max_iter = 100;
  // Stop once no centroid coordinate moves by tol or more in a round.
  double tol = 1e-6;
  unsigned threads = 1;
};

struct KMeansFit {
  Codebook codebook;
  // Sum of squared distances after each assignment pass; the last entry is
  // the inertia of the returned codebook.
  std::vector<double> inertia;
  std::vector<std::size_t> assignment;
  int iterations = 0;
  bool converged = false;
};

// Lloyd's algorithm from k-means++ seeding. Requires at least k distinct
// rows.
KMeansFit fit_kmeans(const Matrix& vectors, const KMeansOptions& options,
                     Role role = Role::kAgent);

// Nearest centroid by squared Euclidean distance, lowest index on ties.
std::size_t assign(const Codebook& codebook, std::span<const double> vector);
std::size_t assign(const Codebook& codebook, std::span<const float> vector);

// Agent clusters map to global ids [0, k_agent), user clusters to
// [k_agent, k_agent + k_user).
struct RoleCodebooks {
  Codebook agent;
  Codebook user;

  std::size_t k_agent() const { return agent.k(); }
  std::size_t k_user() const { return user.k(); }
  std::size_t alphabet_size() const { return agent.k() + user.k(); }
  const Codebook& for_role(Role role) const {
    return role == Role::kAgent ? agent : user;
  }
  int global_id(Role role, std::size_t local) const {
    return static_cast<int>(role == Role::kAgent ? local : k_agent() + local);
  }
  // True when id lies in the range reserved for role.
  bool in_role_range(Role role, int id) const;

  bool operator==(const RoleCodebooks&) const = default;
};

// Fits the two codebooks independently on the embedded turns of each role,
// in corpus order. options.k is ignored.
RoleCodebooks fit_role_codebooks(const ConversationCorpus& corpus,
                                 std::size_t k_agent, std::size_t k_user,
                                 const KMeansOptions& options);

struct DiscretizedConversation {
  std::string id;
  std::vector<int> symbols;
  std::vector<Role> roles;

  bool operator==(const DiscretizedConversation&) const = default;
};

// Turns that already carry a cluster keep it (after a role-range check);
// the rest are assigned from their embedding.
std::vector<DiscretizedConversation> discretize_corpus(
    const ConversationCorpus& corpus, const RoleCodebooks& codebooks);

// Symbols read straight from the "cluster" field of every turn.
std::vector<DiscretizedConversation> discretized_from_clusters(
    const ConversationCorpus& corpus);

// Writes each conversation's symbols into the turns' cluster field.
ConversationCorpus annotate_clusters(
    ConversationCorpus corpus,
    const std::vector<DiscretizedConversation>& discretized,
    std::size_t alphabet_size);

std::vector<std::vector<int>> symbol_sequences(
    const std::vector<DiscretizedConversation>& discretized);

std::string format_codebooks(const RoleCodebooks& codebooks);
RoleCodebooks parse_codebooks(std::string_view contents);
void save_codebooks(const RoleCodebooks& codebooks,
                    const std::filesystem::path& path);
RoleCodebooks load_codebooks(const std::filesystem::path& path);

}  // namespace convstruct

#endif  // CONVSTRUCT_VQ_H_
