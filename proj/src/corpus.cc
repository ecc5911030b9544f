// corpus.cc
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

#include "convstruct/corpus.h"

#include <bit>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "convstruct/error.h"
#include "json.hpp"

namespace convstruct {

namespace {

using nlohmann::json;

std::string turn_ref(const std::string& id, std::size_t turn) {
  return id + "[" + std::to_string(turn) + "]";
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

int parse_index_field(const json& value, const char* name, std::size_t line,
                      const std::string& ref) {
  const bool ok =
      value.is_number_unsigned() ||
      (value.is_number_integer() && value.get<std::int64_t>() >= 0);
  if (!ok || value.get<std::uint64_t>() >
                 static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    fail_line(line, std::string("malformed record: \"") + name + "\" at " +
                        ref + " must be a non-negative integer");
  }
  return static_cast<int>(value.get<std::uint64_t>());
}

Conversation parse_record(const json& record, std::size_t line) {
  if (!record.is_object()) fail_line(line, "malformed record: not an object");
  Conversation conv;
  const auto id = record.find("id");
  if (id == record.end() || !id->is_string())
    fail_line(line, "malformed record: missing string \"id\"");
  conv.id = id->get<std::string>();

  if (const auto labels = record.find("labels"); labels != record.end()) {
    if (!labels->is_object())
      fail_line(line, "malformed record: \"labels\" must be an object");
    for (const auto& [key, value] : labels->items()) {
      if (!value.is_string())
        fail_line(line, "malformed record: label \"" + key +
                            "\" must be a string");
      conv.labels.emplace(key, value.get<std::string>());
    }
  }

  const auto turns = record.find("turns");
  if (turns == record.end() || !turns->is_array())
    fail_line(line, "malformed record: missing array \"turns\"");
  if (turns->empty()) fail_line(line, "empty turn list in " + conv.id);

  for (std::size_t t = 0; t < turns->size(); ++t) {
    const json& jt = (*turns)[t];
    const std::string ref = turn_ref(conv.id, t);
    if (!jt.is_object())
      fail_line(line, "malformed record: turn " + ref + " is not an object");
    Turn turn;
    const auto role = jt.find("role");
    if (role == jt.end() || !role->is_string())
      fail_line(line, "malformed record: missing role at " + ref);
    try {
      turn.role = parse_role(role->get<std::string>());
    } catch (const DataError& e) {
      fail_line(line, std::string("malformed record: ") + e.what() + " at " +
                          ref);
    }
    if (const auto text = jt.find("text"); text != jt.end()) {
      if (!text->is_string())
        fail_line(line, "malformed record: \"text\" at " + ref +
                            " must be a string");
      turn.text = text->get<std::string>();
    }
    if (const auto emb = jt.find("embedding"); emb != jt.end()) {
      if (!emb->is_array() || emb->empty())
        fail_line(line, "malformed record: \"embedding\" at " + ref +
                            " must be a non-empty array");
      std::vector<float> values;
      values.reserve(emb->size());
      for (const auto& v : *emb) {
        if (!v.is_number())
          fail_line(line, "malformed record: non-numeric embedding at " + ref);
        values.push_back(static_cast<float>(v.get<double>()));
      }
      turn.embedding = std::move(values);
    }
    if (const auto c = jt.find("cluster"); c != jt.end())
      turn.cluster = parse_index_field(*c, "cluster", line, ref);
    if (const auto s = jt.find("state"); s != jt.end())
      turn.state = parse_index_field(*s, "state", line, ref);
    if (!turn.text && !turn.embedding && !turn.cluster)
      fail_line(line, "malformed record: turn " + ref +
                          " has none of text, embedding, cluster");
    conv.turns.push_back(std::move(turn));
  }
  return conv;
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8)
    out.push_back(static_cast<char>((v >> shift) & 0xff));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint16_t u16() {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 2;
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::string_view take(std::size_t n) {
    const std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view role_name(Role role) {
  return role == Role::kAgent ? "agent" : "user";
}

Role parse_role(std::string_view name) {
  if (name == "agent") return Role::kAgent;
  if (name == "user") return Role::kUser;
  throw DataError("unknown role \"" + std::string(name) + "\"");
}

std::size_t ConversationCorpus::num_turns() const {
  std::size_t n = 0;
  for (const auto& c : conversations) n += c.turns.size();
  return n;
}

std::optional<std::size_t> ConversationCorpus::find(std::string_view id) const {
  for (std::size_t i = 0; i < conversations.size(); ++i)
    if (conversations[i].id == id) return i;
  return std::nullopt;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

ConversationCorpus parse_conversations(std::string_view contents,
                                       bool expect_embeddings) {
  ConversationCorpus corpus;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line.begin(), line.end());
    } catch (const json::exception& e) {
      fail_line(line_no, std::string("malformed record: ") + e.what());
    }
    Conversation conv = parse_record(record, line_no);
    if (!seen.insert(conv.id).second)
      fail_line(line_no, "duplicate conversation id \"" + conv.id + "\"");

    for (std::size_t t = 0; t < conv.turns.size(); ++t) {
      const auto& emb = conv.turns[t].embedding;
      if (!emb) {
        if (expect_embeddings)
          fail_line(line_no, "missing embedding at " + turn_ref(conv.id, t));
        continue;
      }
      if (!corpus.embedding_dim) {
        corpus.embedding_dim = emb->size();
      } else if (*corpus.embedding_dim != emb->size()) {
        fail_line(line_no, "inconsistent embedding dimension at " +
                               turn_ref(conv.id, t) + " (expected " +
                               std::to_string(*corpus.embedding_dim) +
                               ", got " + std::to_string(emb->size()) + ")");
      }
    }
    corpus.conversations.push_back(std::move(conv));
  }
  return corpus;
}

ConversationCorpus load_conversations(const std::filesystem::path& path,
                                      bool expect_embeddings) {
  try {
    return parse_conversations(read_file(path), expect_embeddings);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ConversationCorpus attach_embeddings(ConversationCorpus corpus,
                                     const EmbeddingMatrix& matrix) {
  if (matrix.index.size() != matrix.rows ||
      matrix.data.size() != std::size_t{matrix.rows} * matrix.dim)
    throw DataError("embedding matrix: index/row count mismatch");
  if (corpus.embedding_dim && *corpus.embedding_dim != matrix.dim)
    throw DataError("embedding dimension conflict: corpus has " +
                    std::to_string(*corpus.embedding_dim) + ", matrix has " +
                    std::to_string(matrix.dim));
  if (matrix.rows == 0) return corpus;

  std::map<std::string, std::size_t, std::less<>> by_id;
  for (std::size_t i = 0; i < corpus.conversations.size(); ++i)
    by_id.emplace(corpus.conversations[i].id, i);

  for (std::size_t r = 0; r < matrix.rows; ++r) {
    const auto& [id, turn_index] = matrix.index[r];
    const auto it = by_id.find(id);
    if (it == by_id.end() ||
        turn_index >= corpus.conversations[it->second].turns.size())
      throw DataError("dangling index " + turn_ref(id, turn_index) +
                      " in embedding matrix");
    Turn& turn = corpus.conversations[it->second].turns[turn_index];
    if (turn.embedding)
      throw DataError("embedding conflict at " + turn_ref(id, turn_index) +
                      ": turn already carries an inline embedding");
    turn.embedding.emplace(matrix.row(r), matrix.row(r) + matrix.dim);
  }
  corpus.embedding_dim = matrix.dim;
  return corpus;
}

std::string format_conversations(const ConversationCorpus& corpus) {
  std::string out;
  for (const auto& conv : corpus.conversations) {
    nlohmann::ordered_json record;
    record["id"] = conv.id;
    if (!conv.labels.empty()) {
      nlohmann::ordered_json labels = nlohmann::ordered_json::object();
      for (const auto& [k, v] : conv.labels) labels[k] = v;
      record["labels"] = std::move(labels);
    }
    nlohmann::ordered_json turns = nlohmann::ordered_json::array();
    for (const auto& turn : conv.turns) {
      nlohmann::ordered_json jt;
      jt["role"] = std::string(role_name(turn.role));
      if (turn.text) jt["text"] = *turn.text;
      if (turn.embedding) {
        nlohmann::ordered_json emb = nlohmann::ordered_json::array();
        for (float v : *turn.embedding) emb.push_back(static_cast<double>(v));
        jt["embedding"] = std::move(emb);
      }
      if (turn.cluster) jt["cluster"] = *turn.cluster;
      if (turn.state) jt["state"] = *turn.state;
      turns.push_back(std::move(jt));
    }
    record["turns"] = std::move(turns);
    out += record.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

void write_annotated(const ConversationCorpus& corpus,
                     const std::filesystem::path& path) {
  bool annotated = false;
  for (const auto& conv : corpus.conversations)
    for (const auto& turn : conv.turns)
      annotated = annotated || turn.cluster || turn.state;
  if (!annotated) throw DataError("nothing to annotate");
  std::string contents;
  try {
    contents = format_conversations(corpus);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("cannot serialize corpus: ") + e.what());
  }
  write_file(path, contents);
}

std::string encode_embedding_matrix(const EmbeddingMatrix& matrix) {
  if (matrix.index.size() != matrix.rows ||
      matrix.data.size() != std::size_t{matrix.rows} * matrix.dim)
    throw DataError("embedding matrix: index/row count mismatch");
  std::string out = "EMB1";
  put_u32(out, matrix.rows);
  put_u32(out, matrix.dim);
  for (float v : matrix.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  for (const auto& [id, turn] : matrix.index) {
    if (id.size() > 0xffff)
      throw DataError("embedding matrix: id longer than 65535 bytes");
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out += id;
    put_u32(out, turn);
  }
  return out;
}

EmbeddingMatrix decode_embedding_matrix(std::string_view bytes) {
  ByteReader in(bytes);
  if (!in.has(4) || in.take(4) != "EMB1")
    throw DataError("embedding matrix: bad magic");
  if (!in.has(8)) throw DataError("embedding matrix: truncated payload");
  EmbeddingMatrix m;
  m.rows = in.u32();
  m.dim = in.u32();
  if (m.dim == 0) throw DataError("embedding matrix: zero dimension");
  const std::uint64_t values = std::uint64_t{m.rows} * m.dim;
  if (values > in.remaining() / 4)
    throw DataError("embedding matrix: truncated payload");
  m.data.resize(values);
  for (auto& v : m.data) v = std::bit_cast<float>(in.u32());

  std::set<std::pair<std::string, std::uint32_t>> seen;
  m.index.reserve(m.rows);
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    if (!in.has(2))
      throw DataError("embedding matrix: index/row count mismatch");
    const std::uint16_t len = in.u16();
    if (!in.has(std::size_t{len} + 4))
      throw DataError("embedding matrix: index/row count mismatch");
    std::string id(in.take(len));
    const std::uint32_t turn = in.u32();
    if (!seen.emplace(id, turn).second)
      throw DataError("embedding matrix: duplicate index entry " +
                      turn_ref(id, turn));
    m.index.emplace_back(std::move(id), turn);
  }
  if (in.remaining() != 0)
    throw DataError("embedding matrix: index/row count mismatch");
  return m;
}

EmbeddingMatrix read_embedding_matrix(const std::filesystem::path& path) {
  try {
    return decode_embedding_matrix(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_embedding_matrix(const EmbeddingMatrix& matrix,
                            const std::filesystem::path& path) {
  write_file(path, encode_embedding_matrix(matrix));
}

}  // namespace convstruct
