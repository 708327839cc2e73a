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

#include "stylemetrics/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "stylemetrics/errors.hpp"
#include "stylemetrics/io.hpp"

namespace stylemetrics {
namespace {

using nlohmann::json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), is_space);
}

const std::string& require_string(const json& obj, const char* key, const std::string& source,
                                  std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ParseError(source, line, std::string("field '") + key + "' must be a string");
  return it->get_ref<const std::string&>();
}

}  // namespace

std::string Sentence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Sentence tokenize(std::string_view raw, bool lowercase) {
  Sentence s;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(raw[i])) ++i;
    std::size_t start = i;
    while (i < raw.size() && !is_space(raw[i])) ++i;
    if (i > start) {
      std::string tok(raw.substr(start, i - start));
      if (lowercase) {
        for (auto& c : tok) {
          if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
      }
      s.tokens.push_back(std::move(tok));
    }
  }
  return s;
}

Corpus load_corpus(const std::filesystem::path& path, const StyleLabel& style) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  Corpus corpus{style, {}, path.string()};
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    corpus.sentences.push_back(tokenize(line));
  }
  if (in.bad()) throw IoError("error while reading corpus '" + path.string() + "'");
  if (corpus.sentences.empty()) {
    throw EmptyCorpusError("corpus '" + path.string() + "' has no non-blank lines");
  }
  return corpus;
}

TransferSet parse_transfer_set(std::istream& in, const std::string& source,
                               const std::optional<LabelPair>& labels) {
  struct RawRecord {
    std::string id, original, transferred, source_style, target_style;
    std::size_t line;
  };
  std::vector<RawRecord> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source, lineno, "record must be a JSON object");
    raw.push_back({require_string(obj, "id", source, lineno),
                   require_string(obj, "original", source, lineno),
                   require_string(obj, "transferred", source, lineno),
                   require_string(obj, "source_style", source, lineno),
                   require_string(obj, "target_style", source, lineno), lineno});
  }
  if (raw.empty()) throw ValidationError(source + ": transfer set has no records");

  // Every record must use the same unordered pair of style names.
  const auto& first = raw.front();
  if (first.source_style == first.target_style) {
    throw ValidationError(source + ":" + std::to_string(first.line) +
                          ": source_style equals target_style ('" + first.source_style + "')");
  }
  LabelPair pair = {std::min(first.source_style, first.target_style),
                    std::max(first.source_style, first.target_style)};
  for (const auto& r : raw) {
    LabelPair p = {std::min(r.source_style, r.target_style),
                   std::max(r.source_style, r.target_style)};
    if (r.source_style == r.target_style) {
      throw ValidationError(source + ":" + std::to_string(r.line) +
                            ": source_style equals target_style ('" + r.source_style + "')");
    }
    if (p != pair) {
      throw ValidationError(source + ":" + std::to_string(r.line) + ": label pair {" + p[0] + ", " +
                            p[1] + "} differs from {" + pair[0] + ", " + pair[1] + "}");
    }
  }
  if (labels) {
    LabelPair sorted = {std::min((*labels)[0], (*labels)[1]), std::max((*labels)[0], (*labels)[1])};
    if (sorted != pair) {
      throw ValidationError(source + ": style names {" + pair[0] + ", " + pair[1] +
                            "} do not match the expected labels {" + (*labels)[0] + ", " +
                            (*labels)[1] + "}");
    }
    pair = *labels;
  }
  auto label_of = [&](const std::string& name) {
    return StyleLabel{name == pair[0] ? 0 : 1, name};
  };

  TransferSet set;
  set.records.reserve(raw.size());
  for (auto& r : raw) {
    TransferRecord rec{std::move(r.id), tokenize(r.original), tokenize(r.transferred),
                       label_of(r.source_style), label_of(r.target_style)};
    if (rec.original.empty()) {
      throw ValidationError(source + ":" + std::to_string(r.line) + ": original sentence is empty");
    }
    set.records.push_back(std::move(rec));
  }
  return set;
}

std::filesystem::path transfer_meta_path(const std::filesystem::path& path) {
  auto meta = path;
  meta += ".meta.json";
  return meta;
}

TransferSet load_transfer_set(const std::filesystem::path& path,
                              const std::optional<LabelPair>& labels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transfer set '" + path.string() + "'");
  TransferSet set = parse_transfer_set(in, path.string(), labels);

  auto meta_path = transfer_meta_path(path);
  if (std::filesystem::exists(meta_path)) {
    json meta;
    try {
      meta = json::parse(read_file(meta_path));
      set.checkpoint_meta = CheckpointMeta{meta.at("model_name").get<std::string>(),
                                           meta.at("epoch").get<double>()};
    } catch (const json::exception& e) {
      throw ParseError(meta_path.string(), 0, std::string("invalid checkpoint meta: ") + e.what());
    }
  }
  return set;
}

void save_transfer_set(const TransferSet& set, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : set.records) {
    json obj = {{"id", r.id},
                {"original", r.original.joined()},
                {"transferred", r.transferred.joined()},
                {"source_style", r.source_style.name},
                {"target_style", r.target_style.name}};
    out += obj.dump();
    out.push_back('\n');
  }
  write_file_atomic(path, out);
  if (set.checkpoint_meta) {
    json meta = {{"model_name", set.checkpoint_meta->model_name},
                 {"epoch", set.checkpoint_meta->epoch}};
    write_file_atomic(transfer_meta_path(path), meta.dump() + "\n");
  }
}

LabelPair label_pair(const TransferSet& set) {
  if (set.records.empty()) throw ValidationError("transfer set has no records");
  const auto& r = set.records.front();
  LabelPair pair;
  pair[r.source_style.id] = r.source_style.name;
  pair[r.target_style.id] = r.target_style.name;
  return pair;
}

}  // namespace stylemetrics
