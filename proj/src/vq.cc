// vq.cc
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

#include "convstruct/vq.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convstruct/error.h"
#include "convstruct/kernels.h"
#include "convstruct/parallel.h"
#include "convstruct/random.h"
#include "text_io.h"

namespace convstruct {

namespace {

constexpr std::size_t kPointBlock = 256;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t count_distinct_rows(const Matrix& m) {
  std::vector<std::size_t> order(m.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(),
                                        rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (less(order[i - 1], order[i])) ++distinct;
  return distinct;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const auto& kt = kernels::active();
  const std::size_t n = points.rows(), dim = points.cols();
  Matrix centroids(dim);
  centroids.push_back(points.row(rng.index(n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = kt.squared_distance(points.row(i).data(), centroids.row(0).data(),
                                dim);
  while (centroids.rows() < k) {
    const std::size_t pick = rng.categorical(d2);
    centroids.push_back(points.row(pick));
    const double* c = centroids.row(centroids.rows() - 1).data();
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], kt.squared_distance(points.row(i).data(), c, dim));
  }
  return centroids;
}

struct BlockStats {
  std::vector<double> sums, lo, hi;
  std::vector<std::size_t> counts;
  double inertia = 0.0;
};

struct ClusterStats {
  Matrix sums, lo, hi;
  std::vector<std::size_t> counts;
};

// One assignment pass. Per-block partial sums are reduced in block order.
double assign_pass(const Matrix& points, const Matrix& centroids,
                   unsigned threads, std::vector<std::size_t>& labels,
                   std::vector<double>& dist, ClusterStats* stats) {
  const auto& kt = kernels::active();
  const std::size_t n = points.rows(), k = centroids.rows(),
                    dim = points.cols();
  const std::size_t blocks = num_blocks(n, kPointBlock);
  std::vector<BlockStats> partial(blocks);
  parallel_for_blocks(blocks, threads, [&](std::size_t b) {
    BlockStats& st = partial[b];
    if (stats) {
      st.sums.assign(k * dim, 0.0);
      st.lo.assign(k * dim, kInf);
      st.hi.assign(k * dim, -kInf);
      st.counts.assign(k, 0);
    }
    const std::size_t end = std::min(n, (b + 1) * kPointBlock);
    for (std::size_t i = b * kPointBlock; i < end; ++i) {
      double best = 0.0;
      const std::size_t j = kt.nearest_row(points.row(i).data(),
                                           centroids.data(), k, dim, &best);
      labels[i] = j;
      dist[i] = best;
      st.inertia += best;
      if (stats) {
        const double* p = points.row(i).data();
        kt.accumulate(st.sums.data() + j * dim, p, dim);
        for (std::size_t d = 0; d < dim; ++d) {
          st.lo[j * dim + d] = std::min(st.lo[j * dim + d], p[d]);
          st.hi[j * dim + d] = std::max(st.hi[j * dim + d], p[d]);
        }
        ++st.counts[j];
      }
    }
  });
  double inertia = 0.0;
  if (stats) {
    stats->sums = Matrix(k, dim);
    stats->lo = Matrix(k, dim);
    stats->hi = Matrix(k, dim);
    std::fill_n(stats->lo.data(), k * dim, kInf);
    std::fill_n(stats->hi.data(), k * dim, -kInf);
    stats->counts.assign(k, 0);
  }
  for (const auto& st : partial) {
    inertia += st.inertia;
    if (!stats) continue;
    kt.accumulate(stats->sums.data(), st.sums.data(), k * dim);
    for (std::size_t x = 0; x < k * dim; ++x) {
      stats->lo.data()[x] = std::min(stats->lo.data()[x], st.lo[x]);
      stats->hi.data()[x] = std::max(stats->hi.data()[x], st.hi[x]);
    }
    for (std::size_t j = 0; j < k; ++j) stats->counts[j] += st.counts[j];
  }
  return inertia;
}

void check_options(const KMeansOptions& options) {
  if (options.k == 0) throw DataError("k-means: k must be positive");
  if (options.max_iter <= 0)
    throw DataError("k-means: max_iter must be positive");
  if (!(options.tol > 0.0)) throw DataError("k-means: tol must be positive");
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols())
      throw DataError("dimension mismatch among vectors: row " +
                      std::to_string(r) + " has " +
                      std::to_string(rows[r].size()) + ", expected " +
                      std::to_string(m.cols()));
    m.push_back(rows[r]);
  }
  return m;
}

void Matrix::push_back(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_)
    throw DataError("dimension mismatch: got " + std::to_string(values.size()) +
                    ", expected " + std::to_string(cols_));
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void Matrix::push_back(std::span<const float> values) {
  std::vector<double> wide(values.begin(), values.end());
  push_back(std::span<const double>(wide));
}

KMeansFit fit_kmeans(const Matrix& vectors, const KMeansOptions& options,
                     Role role) {
  check_options(options);
  if (vectors.cols() == 0 && vectors.rows() > 0)
    throw DataError("k-means: zero-dimensional vectors");
  const std::size_t distinct = count_distinct_rows(vectors);
  if (distinct < options.k)
    throw DataError("k-means: fewer distinct vectors (" +
                    std::to_string(distinct) + ") than k (" +
                    std::to_string(options.k) + ")");

  const std::size_t n = vectors.rows(), k = options.k, dim = vectors.cols();
  const auto& kt = kernels::active();
  Rng rng(options.seed);
  KMeansFit fit;
  fit.codebook.role = role;
  fit.codebook.seed = options.seed;
  Matrix centroids = seed_plus_plus(vectors, k, rng);

  std::vector<std::size_t> labels(n);
  std::vector<double> dist(n);
  ClusterStats stats;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    fit.inertia.push_back(assign_pass(vectors, centroids, options.threads,
                                      labels, dist, &stats));
    Matrix updated = centroids;
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < k; ++j) {
      if (stats.counts[j] == 0) {
        empty.push_back(j);
        continue;
      }
      auto dst = updated.row(j);
      const auto src = stats.sums.row(j);
      const auto lo = stats.lo.row(j), hi = stats.hi.row(j);
      const double count = static_cast<double>(stats.counts[j]);
      for (std::size_t d = 0; d < dim; ++d)
        dst[d] = std::clamp(src[d] / count, lo[d], hi[d]);
    }
    // A cluster that lost all members moves to the point farthest from its
    // nearest centroid.
    for (std::size_t j : empty) {
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        kt.nearest_row(vectors.row(i).data(), updated.data(), k, dim, &d);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy_n(vectors.row(far).data(), dim, updated.row(j).data());
    }
    double movement = 0.0;
    for (std::size_t x = 0; x < k * dim; ++x)
      movement =
          std::max(movement, std::abs(updated.data()[x] - centroids.data()[x]));
    centroids = std::move(updated);
    ++fit.iterations;
    if (movement < options.tol && empty.empty()) {
      fit.converged = true;
      break;
    }
  }
  fit.inertia.push_back(
      assign_pass(vectors, centroids, options.threads, labels, dist, nullptr));
  fit.assignment = std::move(labels);
  fit.codebook.centroids = std::move(centroids);
  return fit;
}

std::size_t assign(const Codebook& codebook, std::span<const double> vector) {
  if (vector.size() != codebook.dim())
    throw DataError("assign: dimension mismatch (codebook " +
                    std::to_string(codebook.dim()) + ", vector " +
                    std::to_string(vector.size()) + ")");
  return kernels::active().nearest_row(vector.data(),
                                       codebook.centroids.data(),
                                       codebook.k(), codebook.dim(), nullptr);
}

std::size_t assign(const Codebook& codebook, std::span<const float> vector) {
  const std::vector<double> wide(vector.begin(), vector.end());
  return assign(codebook, std::span<const double>(wide));
}

bool RoleCodebooks::in_role_range(Role role, int id) const {
  if (id < 0) return false;
  const auto u = static_cast<std::size_t>(id);
  return role == Role::kAgent ? u < k_agent()
                              : (u >= k_agent() && u < alphabet_size());
}

RoleCodebooks fit_role_codebooks(const ConversationCorpus& corpus,
                                 std::size_t k_agent, std::size_t k_user,
                                 const KMeansOptions& options) {
  Matrix agent_points, user_points;
  for (const auto& conv : corpus.conversations)
    for (const auto& turn : conv.turns) {
      if (!turn.embedding) continue;
      (turn.role == Role::kAgent ? agent_points : user_points)
          .push_back(std::span<const float>(*turn.embedding));
    }
  auto fit_one = [&](const Matrix& points, std::size_t k, Role role) {
    KMeansOptions opt = options;
    opt.k = k;
    try {
      return fit_kmeans(points, opt, role).codebook;
    } catch (const DataError& e) {
      throw DataError(std::string(role_name(role)) + " codebook: " + e.what());
    }
  };
  RoleCodebooks books;
  books.agent = fit_one(agent_points, k_agent, Role::kAgent);
  books.user = fit_one(user_points, k_user, Role::kUser);
  if (books.agent.dim() != books.user.dim())
    throw DataError("agent and user embeddings differ in dimension");
  return books;
}

std::vector<DiscretizedConversation> discretize_corpus(
    const ConversationCorpus& corpus, const RoleCodebooks& codebooks) {
  std::vector<DiscretizedConversation> out;
  out.reserve(corpus.conversations.size());
  for (const auto& conv : corpus.conversations) {
    DiscretizedConversation dc;
    dc.id = conv.id;
    for (std::size_t t = 0; t < conv.turns.size(); ++t) {
      const Turn& turn = conv.turns[t];
      const std::string ref = conv.id + "[" + std::to_string(t) + "]";
      int symbol = 0;
      if (turn.cluster) {
        if (!codebooks.in_role_range(turn.role, *turn.cluster))
          throw DataError("role-range violation at " + ref + ": cluster " +
                          std::to_string(*turn.cluster) + " on " +
                          std::string(role_name(turn.role)) + " turn");
        symbol = *turn.cluster;
      } else if (turn.embedding) {
        const Codebook& book = codebooks.for_role(turn.role);
        symbol = codebooks.global_id(
            turn.role, assign(book, std::span<const float>(*turn.embedding)));
      } else {
        throw DataError("turn " + ref + " has neither embedding nor cluster");
      }
      dc.symbols.push_back(symbol);
      dc.roles.push_back(turn.role);
    }
    out.push_back(std::move(dc));
  }
  return out;
}

std::vector<DiscretizedConversation> discretized_from_clusters(
    const ConversationCorpus& corpus) {
  std::vector<DiscretizedConversation> out;
  out.reserve(corpus.conversations.size());
  for (const auto& conv : corpus.conversations) {
    DiscretizedConversation dc;
    dc.id = conv.id;
    for (std::size_t t = 0; t < conv.turns.size(); ++t) {
      const Turn& turn = conv.turns[t];
      if (!turn.cluster)
        throw DataError("turn " + conv.id + "[" + std::to_string(t) +
                        "] has no cluster");
      dc.symbols.push_back(*turn.cluster);
      dc.roles.push_back(turn.role);
    }
    out.push_back(std::move(dc));
  }
  return out;
}

ConversationCorpus annotate_clusters(
    ConversationCorpus corpus,
    const std::vector<DiscretizedConversation>& discretized,
    std::size_t alphabet_size) {
  if (discretized.size() != corpus.conversations.size())
    throw DataError("annotate: conversation count mismatch");
  for (std::size_t i = 0; i < discretized.size(); ++i) {
    Conversation& conv = corpus.conversations[i];
    const auto& dc = discretized[i];
    if (dc.id != conv.id || dc.symbols.size() != conv.turns.size())
      throw DataError("annotate: mismatch at conversation " + conv.id);
    for (std::size_t t = 0; t < dc.symbols.size(); ++t) {
      if (dc.symbols[t] < 0 ||
          static_cast<std::size_t>(dc.symbols[t]) >= alphabet_size)
        throw DataError("annotate: symbol out of alphabet at " + conv.id);
      conv.turns[t].cluster = dc.symbols[t];
    }
  }
  corpus.alphabet_size = alphabet_size;
  return corpus;
}

std::vector<std::vector<int>> symbol_sequences(
    const std::vector<DiscretizedConversation>& discretized) {
  std::vector<std::vector<int>> out;
  out.reserve(discretized.size());
  for (const auto& dc : discretized) out.push_back(dc.symbols);
  return out;
}

std::string format_codebooks(const RoleCodebooks& codebooks) {
  std::string out = "convstruct-codebooks 1\n";
  for (const Codebook* book : {&codebooks.agent, &codebooks.user}) {
    out += "role ";
    out += role_name(book->role);
    out += "\nk " + std::to_string(book->k()) + "\ndim " +
           std::to_string(book->dim()) + "\nseed " +
           std::to_string(book->seed) + "\n";
    for (std::size_t j = 0; j < book->k(); ++j) {
      out += "centroid";
      for (double v : book->centroids.row(j)) {
        out += ' ';
        out += text::format_double(v);
      }
      out += '\n';
    }
  }
  return out;
}

RoleCodebooks parse_codebooks(std::string_view contents) {
  text::LineCursor in(text::split_lines(contents), "codebooks");
  const auto& header = in.expect("convstruct-codebooks");
  if (header.words[1] != "1")
    text::fail(in.what(), header.number, "unsupported version");
  RoleCodebooks books;
  for (Role expected : {Role::kAgent, Role::kUser}) {
    const auto& role_line = in.expect("role");
    Codebook book;
    try {
      book.role = parse_role(role_line.words[1]);
    } catch (const DataError& e) {
      text::fail(in.what(), role_line.number, e.what());
    }
    if (book.role != expected)
      text::fail(in.what(), role_line.number, "codebooks out of order");
    const auto& kl = in.expect("k");
    const auto k = text::parse_uint(kl.words[1], in.what(), kl.number);
    const auto& dl = in.expect("dim");
    const auto dim = text::parse_uint(dl.words[1], in.what(), dl.number);
    const auto& sl = in.expect("seed");
    book.seed = text::parse_uint(sl.words[1], in.what(), sl.number);
    if (k == 0 || dim == 0)
      text::fail(in.what(), kl.number, "k and dim must be positive");
    book.centroids = Matrix(dim);
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& cl = in.expect("centroid");
      if (cl.words.size() != dim + 1)
        text::fail(in.what(), cl.number, "centroid has wrong dimension");
      for (std::size_t d = 0; d < dim; ++d)
        row[d] = text::parse_double(cl.words[d + 1], in.what(), cl.number);
      book.centroids.push_back(std::span<const double>(row));
    }
    (expected == Role::kAgent ? books.agent : books.user) = std::move(book);
  }
  if (!in.done())
    text::fail(in.what(), in.peek().number, "trailing content");
  if (books.agent.dim() != books.user.dim())
    throw DataError("codebooks: agent and user dimensions differ");
  return books;
}

void save_codebooks(const RoleCodebooks& codebooks,
                    const std::filesystem::path& path) {
  write_file(path, format_codebooks(codebooks));
}

RoleCodebooks load_codebooks(const std::filesystem::path& path) {
  try {
    return parse_codebooks(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace convstruct
