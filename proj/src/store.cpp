// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/store.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"

namespace webexpert {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw VersionGapError("missing store file: " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& p, const std::string& content) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

std::string now_utc() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string rules_file(int v) { return "rules-" + std::to_string(v) + ".jsonl"; }
std::string aliases_file(int v) { return "aliases-" + std::to_string(v) + ".json"; }
std::string clusters_file(int v) { return "clusters-" + std::to_string(v) + ".jsonl"; }
std::string tuples_file(int v) { return "tuples-" + std::to_string(v) + ".jsonl"; }

}  // namespace

std::string ExperienceBaseVersion::resolve(const std::string& rule_id) const {
  std::string cur = rule_id;
  std::size_t hops = 0;
  while (!rules.count(cur)) {
    auto it = aliases.find(cur);
    if (it == aliases.end() || ++hops > aliases.size()) {
      throw Error("alias chain for '" + rule_id + "' does not reach a live rule");
    }
    cur = it->second;
  }
  return cur;
}

ExperienceStore ExperienceStore::open(const std::string& dir) {
  ExperienceStore store(dir);
  fs::create_directories(dir);
  fs::path manifest = fs::path(dir) / "manifest.json";
  if (fs::exists(manifest)) {
    json m = json::parse(read_file(manifest), nullptr, false);
    if (m.is_discarded() || !m.contains("latest_version")) {
      throw CorruptManifestError("unparseable manifest: " + manifest.string());
    }
    store.latest_version_ = m["latest_version"].get<int>();
  }
  return store;
}

ExperienceBaseVersion ExperienceStore::load(int version) const {
  fs::path base(dir_);
  json m = json::parse(read_file(base / "manifest.json"), nullptr, false);
  if (m.is_discarded()) throw CorruptManifestError("unparseable manifest");

  const json* entry = nullptr;
  for (const auto& v : m.at("versions")) {
    if (v.at("version").get<int>() == version) {
      entry = &v;
      break;
    }
  }
  if (entry == nullptr) {
    throw VersionGapError("version " + std::to_string(version) + " not in manifest");
  }

  ExperienceBaseVersion out;
  out.version = version;
  if (!(*entry)["parent"].is_null()) out.parent = (*entry)["parent"].get<int>();
  out.created_at = entry->at("created_at").get<std::string>();
  out.config_digest = entry->at("config_digest").get<std::string>();

  const auto& files = entry->at("files");
  std::string rules_content = read_file(base / files.at("rules").get<std::string>());
  std::istringstream rin(rules_content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(rin, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw CorruptManifestError("rules file line " + std::to_string(lineno) +
                                 " is not valid JSON");
    }
    ExperienceRule r = rule_from_json(j);
    out.rules[r.rule_id] = std::move(r);
  }

  json aliases = json::parse(read_file(base / files.at("aliases").get<std::string>()),
                             nullptr, false);
  if (aliases.is_discarded()) throw CorruptManifestError("unparseable aliases file");
  for (auto& [old_id, surv] : aliases.items()) {
    out.aliases[old_id] = surv.get<std::string>();
  }

  if (files.contains("clusters")) {
    out.clusters =
        clusters_from_jsonl(read_file(base / files.at("clusters").get<std::string>()));
  }
  if (files.contains("tuples")) {
    out.tuples =
        parse_qa_jsonl(read_file(base / files.at("tuples").get<std::string>()));
  }
  return out;
}

ExperienceBaseVersion ExperienceStore::latest() const {
  if (latest_version_ < 0) throw VersionGapError("store is empty");
  return load(latest_version_);
}

ExperienceBaseVersion ExperienceStore::commit(const ExperienceBaseVersion& parent,
                                              const ChangeSet& changes) {
  const bool first = latest_version_ < 0;
  if (first) {
    if (parent.version != -1) {
      throw StaleParentError("empty store expects parent version -1");
    }
  } else if (parent.version != latest_version_) {
    throw StaleParentError("parent version " + std::to_string(parent.version) +
                           " is not the latest (" +
                           std::to_string(latest_version_) + ")");
  }

  ExperienceBaseVersion next;
  next.version = latest_version_ + 1;
  if (!first) next.parent = parent.version;
  next.created_at = now_utc();
  next.config_digest =
      changes.config_digest.empty() ? parent.config_digest : changes.config_digest;
  next.rules = parent.rules;
  next.aliases = parent.aliases;
  next.clusters = changes.clusters.empty() ? parent.clusters : changes.clusters;
  next.tuples = changes.tuples.empty() ? parent.tuples : changes.tuples;

  for (const auto& r : changes.adds) {
    if (next.rules.count(r.rule_id) || next.aliases.count(r.rule_id)) {
      throw Error("rule id '" + r.rule_id + "' was already used");
    }
    next.rules[r.rule_id] = r;
  }
  for (const auto& [a, b] : changes.merges) {
    if (!next.rules.count(a) || !next.rules.count(b)) {
      throw Error("merge of unknown rule ids '" + a + "', '" + b + "'");
    }
    const std::string keep = std::min(a, b);
    const std::string drop = std::max(a, b);
    ExperienceRule& kr = next.rules[keep];
    const ExperienceRule& dr = next.rules[drop];
    for (const auto& c : dr.citations) {
      bool seen = false;
      for (const auto& kc : kr.citations) {
        if (kc.url_or_name == c.url_or_name) {
          seen = true;
          break;
        }
      }
      if (!seen) kr.citations.push_back(c);
    }
    std::sort(kr.citations.begin(), kr.citations.end(),
              [](const SourceRef& x, const SourceRef& y) {
                return x.url_or_name < y.url_or_name;
              });
    next.rules.erase(drop);
    next.aliases[drop] = keep;
    // Re-point any chain that ended at the dropped id.
    for (auto& [old_id, surv] : next.aliases) {
      (void)old_id;
      if (surv == drop) surv = keep;
    }
  }
  // Updates land after merges so a re-distilled survivor is authoritative.
  for (const auto& r : changes.updates) {
    if (!next.rules.count(r.rule_id)) {
      throw Error("update for unknown rule id '" + r.rule_id + "'");
    }
    next.rules[r.rule_id] = r;
  }

  // Serialize.
  fs::path base(dir_);
  std::ostringstream rules_out;
  for (const auto& [id, rule] : next.rules) {
    (void)id;
    rules_out << rule_to_json(rule).dump() << "\n";
  }
  json aliases_json = json::object();
  for (const auto& [old_id, surv] : next.aliases) aliases_json[old_id] = surv;

  write_file_atomic(base / rules_file(next.version), rules_out.str());
  write_file_atomic(base / aliases_file(next.version), aliases_json.dump(2) + "\n");
  write_file_atomic(base / clusters_file(next.version),
                    clusters_to_jsonl(next.clusters));
  std::ostringstream tuples_out;
  for (const auto& t : next.tuples) tuples_out << qa_tuple_to_json(t).dump() << "\n";
  write_file_atomic(base / tuples_file(next.version), tuples_out.str());

  json manifest;
  fs::path manifest_path = base / "manifest.json";
  if (fs::exists(manifest_path)) {
    manifest = json::parse(read_file(manifest_path));
  } else {
    manifest["versions"] = json::array();
  }
  manifest["latest_version"] = next.version;
  json entry;
  entry["version"] = next.version;
  entry["parent"] = next.parent ? json(*next.parent) : json(nullptr);
  entry["created_at"] = next.created_at;
  entry["config_digest"] = next.config_digest;
  entry["files"] = {{"rules", rules_file(next.version)},
                    {"aliases", aliases_file(next.version)},
                    {"clusters", clusters_file(next.version)},
                    {"tuples", tuples_file(next.version)}};
  manifest["versions"].push_back(entry);
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");

  latest_version_ = next.version;
  return next;
}

}  // namespace webexpert
