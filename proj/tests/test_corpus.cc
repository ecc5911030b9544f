// test_corpus.cc
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

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>

#include "convstruct/corpus.h"
#include "convstruct/error.h"
#include "doctest.h"
#include "oracles.h"

using namespace convstruct;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("convstruct_test_corpus_" + name);
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

// Hand-assembled little-endian EMB1 image.
std::string emb1(std::uint32_t rows, std::uint32_t dim,
                 const std::vector<float>& values,
                 const std::vector<std::pair<std::string, std::uint32_t>>& index) {
  std::string out = "EMB1";
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  u32(rows);
  u32(dim);
  for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
  for (const auto& [id, turn] : index) {
    out.push_back(static_cast<char>(id.size() & 0xff));
    out.push_back(static_cast<char>(id.size() >> 8));
    out += id;
    u32(turn);
  }
  return out;
}

}  // namespace

TEST_CASE("minimal corpus without embeddings") {
  const auto corpus = parse_conversations(
      R"({"id":"a","turns":[{"role":"agent","text":"hi"},{"role":"user","text":"yo"}]})"
      "\n");
  REQUIRE(corpus.conversations.size() == 1);
  CHECK(corpus.conversations[0].turns.size() == 2);
  CHECK(corpus.conversations[0].turns[1].role == Role::kUser);
  CHECK_FALSE(corpus.embedding_dim.has_value());
}

TEST_CASE("three conversations keep file order") {
  const std::string text =
      R"({"id":"c1","turns":[{"role":"agent","text":"a"},{"role":"user","text":"b"}]})"
      "\n\n"
      R"({"id":"c2","labels":{"outcome":"x"},"turns":[{"role":"agent","cluster":1},{"role":"user","cluster":3},{"role":"agent","cluster":0}]})"
      "\n"
      R"({"id":"c3","turns":[{"role":"agent","text":"a"},{"role":"user","text":"b"},{"role":"agent","text":"c"},{"role":"user","text":"d","state":2}]})"
      "\n";
  const auto corpus = parse_conversations(text);
  REQUIRE(corpus.conversations.size() == 3);
  CHECK(corpus.conversations[0].id == "c1");
  CHECK(corpus.conversations[1].id == "c2");
  CHECK(corpus.conversations[2].id == "c3");
  CHECK(corpus.num_turns() == 9);
  CHECK(corpus.conversations[1].labels.at("outcome") == "x");
  CHECK(corpus.conversations[1].turns[1].cluster == 3);
  CHECK(corpus.conversations[2].turns[3].state == 2);
  CHECK(corpus.find("c3") == 2);
  CHECK_FALSE(corpus.find("zz").has_value());
}

TEST_CASE("inconsistent embedding dimension names the turn") {
  std::string turns;
  for (int t = 0; t < 4; ++t) {
    const int d = t == 3 ? 7 : 8;
    std::string emb;
    for (int i = 0; i < d; ++i) emb += (i ? "," : "") + std::to_string(i);
    turns += std::string(t ? "," : "") + R"({"role":"agent","embedding":[)" + emb + "]}";
  }
  const std::string text = R"({"id":"c1","turns":[)" + turns + "]}\n";
  const std::string msg = error_of([&] { parse_conversations(text); });
  CHECK(msg.find("inconsistent embedding dimension at c1[3]") != std::string::npos);
}

TEST_CASE("malformed input is rejected with a line number") {
  CHECK(error_of([] { parse_conversations("{\"id\":\"a\",\"turns\":[]}\n"); })
            .find("empty turn list") != std::string::npos);
  const std::string dup =
      R"({"id":"a","turns":[{"role":"agent","text":"x"}]})"
      "\n"
      R"({"id":"a","turns":[{"role":"agent","text":"x"}]})"
      "\n";
  CHECK(error_of([&] { parse_conversations(dup); }).find("duplicate") !=
        std::string::npos);
  const std::string bad = R"({"id":"a","turns":[{"role":"agent","text":"x"}]})"
                          "\n{not json\n";
  CHECK(error_of([&] { parse_conversations(bad); }).find("line 2") !=
        std::string::npos);
  CHECK_THROWS_AS(parse_conversations(R"({"id":"a","turns":[{"role":"bot","text":"x"}]})"),
                  DataError);
  CHECK_THROWS_AS(parse_conversations(R"({"id":"a","turns":[{"role":"agent"}]})"),
                  DataError);
  CHECK_THROWS_AS(parse_conversations(R"({"id":"a","turns":[{"role":"agent","cluster":-1}]})"),
                  DataError);
  CHECK_THROWS_AS(parse_conversations(R"({"id":"a","turns":[{"role":"agent","text":"x"}]})",
                                      true),
                  DataError);
  CHECK_THROWS_AS(load_conversations(temp_path("does_not_exist.jsonl")), DataError);
}

TEST_CASE("attach embeddings") {
  auto corpus = parse_conversations(
      R"({"id":"c1","turns":[{"role":"agent","text":"a"},{"role":"user","text":"b"}]})");

  SUBCASE("empty matrix only validates the dimension") {
    EmbeddingMatrix m;
    m.dim = 4;
    const auto out = attach_embeddings(corpus, m);
    CHECK(out.conversations == corpus.conversations);
  }
  SUBCASE("single row") {
    EmbeddingMatrix m{1, 4, {1, 2, 3, 4}, {{"c1", 0}}};
    const auto out = attach_embeddings(corpus, m);
    CHECK(out.conversations[0].turns[0].embedding == std::vector<float>{1, 2, 3, 4});
    CHECK_FALSE(out.conversations[0].turns[1].embedding.has_value());
    CHECK(out.embedding_dim == 4);
  }
  SUBCASE("dangling index") {
    EmbeddingMatrix m{1, 2, {1, 2}, {{"missing", 0}}};
    CHECK(error_of([&] { attach_embeddings(corpus, m); }).find("dangling index") !=
          std::string::npos);
    EmbeddingMatrix past{1, 2, {1, 2}, {{"c1", 2}}};
    CHECK_THROWS_AS(attach_embeddings(corpus, past), DataError);
  }
  SUBCASE("conflicts with inline embeddings") {
    auto inline_corpus = parse_conversations(
        R"({"id":"c1","turns":[{"role":"agent","embedding":[1,2]},{"role":"user","text":"b"}]})");
    EmbeddingMatrix wrong_dim{1, 3, {1, 2, 3}, {{"c1", 1}}};
    CHECK_THROWS_AS(attach_embeddings(inline_corpus, wrong_dim), DataError);
    EmbeddingMatrix same_turn{1, 2, {5, 6}, {{"c1", 0}}};
    CHECK(error_of([&] { attach_embeddings(inline_corpus, same_turn); })
              .find("conflict") != std::string::npos);
  }
}

TEST_CASE("annotated round trip") {
  ConversationCorpus corpus;
  Conversation conv;
  conv.id = "x\"1";
  conv.labels = {{"outcome", "sold"}, {"split", "train"}};
  Turn a;
  a.role = Role::kAgent;
  a.text = "hello \xc3\xa9";
  a.embedding = std::vector<float>{0.1f, -2.5e-7f, 3.4028235e38f};
  a.cluster = 5;
  a.state = 2;
  Turn b;
  b.role = Role::kUser;
  b.cluster = 17;
  conv.turns = {a, b};
  corpus.conversations.push_back(conv);
  corpus.embedding_dim = 3;

  const auto path = temp_path("roundtrip.jsonl");
  write_annotated(corpus, path);
  const std::string text = read_file(path);
  CHECK(text.find("\"cluster\":5,\"state\":2") != std::string::npos);
  const auto back = load_conversations(path);
  CHECK(back == corpus);
  std::filesystem::remove(path);

  ConversationCorpus plain = parse_conversations(
      R"({"id":"c1","turns":[{"role":"agent","text":"a"}]})");
  CHECK(error_of([&] { write_annotated(plain, path); }) == "nothing to annotate");
}

TEST_CASE("synthetic corpus round trips through the writer") {
  auto corpus = oracle::staged_corpus(3, 12);
  for (auto& conv : corpus.conversations)
    for (std::size_t t = 0; t < conv.turns.size(); ++t)
      conv.turns[t].cluster = static_cast<int>(t % 5);
  CHECK(parse_conversations(format_conversations(corpus)) == corpus);
  CHECK(parse_conversations(format_conversations(corpus)) ==
        parse_conversations(format_conversations(corpus)));
}

TEST_CASE("embedding matrix decoding") {
  SUBCASE("zero rows") {
    const auto m = decode_embedding_matrix(emb1(0, 8, {}, {}));
    CHECK(m.rows == 0);
    CHECK(m.dim == 8);
    CHECK(m.data.empty());
  }
  SUBCASE("two rows") {
    const auto m = decode_embedding_matrix(
        emb1(2, 3, {1, 2, 3, 4, 5, 6}, {{"c1", 0}, {"c1", 1}}));
    REQUIRE(m.rows == 2);
    CHECK(std::vector<float>(m.row(0), m.row(0) + 3) == std::vector<float>{1, 2, 3});
    CHECK(std::vector<float>(m.row(1), m.row(1) + 3) == std::vector<float>{4, 5, 6});
    CHECK(m.index[1] == std::pair<std::string, std::uint32_t>{"c1", 1});
  }
  SUBCASE("bit-exact payload") {
    const std::vector<float> odd = {-0.0f, 1e-45f, std::numeric_limits<float>::infinity(),
                                    0.1f};
    const std::string img = emb1(1, 4, odd, {{"\xe2\x82\xac", 70000}});
    const auto m = decode_embedding_matrix(img);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(std::bit_cast<std::uint32_t>(m.data[i]) == std::bit_cast<std::uint32_t>(odd[i]));
    CHECK(m.index[0].second == 70000);
    CHECK(encode_embedding_matrix(m) == img);
  }
  SUBCASE("format errors") {
    const std::string good = emb1(2, 3, {1, 2, 3, 4, 5, 6}, {{"c1", 0}, {"c1", 1}});
    CHECK(error_of([&] { decode_embedding_matrix("EMB2" + good.substr(4)); })
              .find("bad magic") != std::string::npos);
    CHECK(error_of([&] { decode_embedding_matrix(good.substr(0, 12)); })
              .find("truncated payload") != std::string::npos);
    CHECK(error_of([&] { decode_embedding_matrix(good.substr(0, 10)); })
              .find("truncated payload") != std::string::npos);
    CHECK(error_of([&] { decode_embedding_matrix(emb1(2, 3, {1, 2, 3, 4, 5, 6}, {{"c1", 0}})); })
              .find("index/row count mismatch") != std::string::npos);
    CHECK(error_of([&] { decode_embedding_matrix(good + "x"); })
              .find("index/row count mismatch") != std::string::npos);
    CHECK(error_of([&] {
            decode_embedding_matrix(emb1(2, 3, {1, 2, 3, 4, 5, 6}, {{"c1", 0}, {"c1", 0}}));
          }).find("duplicate") != std::string::npos);
    CHECK_THROWS_AS(decode_embedding_matrix(emb1(0, 0, {}, {})), DataError);
  }
  SUBCASE("file round trip") {
    EmbeddingMatrix m{2, 2, {1.5f, -2.0f, 3.25f, 0.0f}, {{"a", 0}, {"b", 3}}};
    const auto path = temp_path("matrix.emb");
    write_embedding_matrix(m, path);
    CHECK(read_embedding_matrix(path) == m);
    std::filesystem::remove(path);
  }
}
