// Copyright 2026 The stylemetrics Authors.
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

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stylemetrics {

// Sentence boundary markers used when padding n-gram contexts.
inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";

// A tokenized sentence. Tokens never contain whitespace.
struct Sentence {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  std::string joined() const;

  bool operator==(const Sentence&) const = default;
};

struct StyleLabel {
  int id = 0;  // 0 or 1
  std::string name;

  bool operator==(const StyleLabel&) const = default;
};

// The two labels of a binary task, indexed by id.
using LabelPair = std::array<std::string, 2>;

struct Corpus {
  StyleLabel style;
  std::vector<Sentence> sentences;
  std::string source_path;
};

struct TransferRecord {
  std::string id;
  Sentence original;
  Sentence transferred;  // may be empty
  StyleLabel source_style;
  StyleLabel target_style;

  bool operator==(const TransferRecord&) const = default;
};

struct CheckpointMeta {
  std::string model_name;
  double epoch = 0.0;

  bool operator==(const CheckpointMeta&) const = default;
};

struct TransferSet {
  std::vector<TransferRecord> records;
  std::optional<CheckpointMeta> checkpoint_meta;

  bool operator==(const TransferSet&) const = default;
};

// Splits on ASCII whitespace; lowercases ASCII letters when requested.
// Non-ASCII bytes pass through unchanged.
Sentence tokenize(std::string_view raw, bool lowercase = true);

// One sentence per non-blank line. Throws IoError or EmptyCorpusError.
Corpus load_corpus(const std::filesystem::path& path, const StyleLabel& style);

// Parses JSON-lines transfer records. Style names are mapped to ids by
// lexicographic order of the two names unless `labels` pins the mapping.
// `source` names the stream in error messages.
TransferSet parse_transfer_set(std::istream& in, const std::string& source,
                               const std::optional<LabelPair>& labels = std::nullopt);

// Reads `path` and, when present, the sidecar `<path>.meta.json`.
TransferSet load_transfer_set(const std::filesystem::path& path,
                              const std::optional<LabelPair>& labels = std::nullopt);

// Writes records as JSON lines plus the sidecar when checkpoint_meta is set.
void save_transfer_set(const TransferSet& set, const std::filesystem::path& path);

std::filesystem::path transfer_meta_path(const std::filesystem::path& path);

// The label pair shared by every record, ordered by id.
LabelPair label_pair(const TransferSet& set);

}  // namespace stylemetrics
