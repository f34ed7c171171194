// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/types.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"

namespace webexpert {

using nlohmann::json;

json source_ref_to_json(const SourceRef& s) {
  json j;
  j["source"] = s.url_or_name;
  if (s.quote) j["quote"] = *s.quote;
  if (s.rank) j["rank"] = *s.rank;
  return j;
}

SourceRef source_ref_from_json(const json& j) {
  SourceRef s;
  s.url_or_name = j.at("source").get<std::string>();
  if (s.url_or_name.empty()) {
    throw Error("citation source must be non-empty");
  }
  if (j.contains("quote") && !j["quote"].is_null()) {
    s.quote = j["quote"].get<std::string>();
  }
  if (j.contains("rank") && !j["rank"].is_null()) {
    s.rank = j["rank"].get<std::size_t>();
  }
  return s;
}

json qa_tuple_to_json(const QATuple& t) {
  json j;
  j["id"] = t.id;
  j["question"] = t.question;
  if (t.answer) j["answer"] = *t.answer;
  if (t.rationale) j["rationale"] = *t.rationale;
  j["citations"] = json::array();
  for (const auto& c : t.citations) j["citations"].push_back(source_ref_to_json(c));
  if (!t.canonical_intent.empty()) j["canonical_intent"] = t.canonical_intent;
  return j;
}

QATuple qa_tuple_from_json(const json& j) {
  QATuple t;
  t.id = j.at("id").get<std::string>();
  t.question = j.at("question").get<std::string>();
  if (j.contains("answer") && !j["answer"].is_null()) {
    auto a = j["answer"].get<std::string>();
    if (!a.empty()) t.answer = a;  // empty answers are treated as absent
  }
  if (j.contains("rationale") && !j["rationale"].is_null()) {
    auto r = j["rationale"].get<std::string>();
    if (!r.empty()) t.rationale = r;
  }
  if (j.contains("citations")) {
    for (const auto& c : j["citations"]) t.citations.push_back(source_ref_from_json(c));
  }
  if (j.contains("canonical_intent") && !j["canonical_intent"].is_null()) {
    t.canonical_intent = j["canonical_intent"].get<std::string>();
  }
  return t;
}

std::vector<QATuple> parse_qa_jsonl(const std::string& content) {
  std::vector<QATuple> out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error("dataset line " + std::to_string(lineno) + " is not valid JSON");
    }
    out.push_back(qa_tuple_from_json(j));
  }
  return out;
}

std::vector<QATuple> load_qa_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_qa_jsonl(buf.str());
}

void save_qa_jsonl(const std::vector<QATuple>& tuples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset: " + path);
  for (const auto& t : tuples) out << qa_tuple_to_json(t).dump() << "\n";
}

}  // namespace webexpert
