// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace webexpert {

struct SourceRef {
  std::string url_or_name;
  std::optional<std::string> quote;
  std::optional<std::size_t> rank;

  bool operator==(const SourceRef&) const = default;
  auto operator<=>(const SourceRef&) const = default;
};

// One harvested (question, answer, rationale, citations) record.
struct QATuple {
  std::string id;
  std::string question;
  std::optional<std::string> answer;
  std::optional<std::string> rationale;
  std::vector<SourceRef> citations;
  std::string canonical_intent;  // filled by canonicalization

  bool operator==(const QATuple&) const = default;
};

nlohmann::json source_ref_to_json(const SourceRef& s);
SourceRef source_ref_from_json(const nlohmann::json& j);

nlohmann::json qa_tuple_to_json(const QATuple& t);
QATuple qa_tuple_from_json(const nlohmann::json& j);

// JSON Lines dataset io: one QATuple per line with fields
// {id, question, answer?, rationale?, citations: [{source, quote?}]}.
std::vector<QATuple> load_qa_jsonl(const std::string& path);
void save_qa_jsonl(const std::vector<QATuple>& tuples, const std::string& path);
std::vector<QATuple> parse_qa_jsonl(const std::string& content);

}  // namespace webexpert
