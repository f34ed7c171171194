// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "webexpert/clustering.hpp"
#include "webexpert/distill.hpp"
#include "webexpert/types.hpp"

namespace webexpert {

// Immutable snapshot of the experience base. Rule files are byte-
// deterministic (one sorted-key JSON object per line), so identical pipeline
// inputs reproduce identical files.
struct ExperienceBaseVersion {
  int version = -1;
  std::map<std::string, ExperienceRule> rules;       // rule_id -> rule
  std::map<std::string, std::string> aliases;        // old_id -> surviving_id
  std::optional<int> parent;
  std::string created_at;
  std::string config_digest;
  // Pipeline state carried for warm-start refreshes.
  std::vector<Cluster> clusters;
  std::vector<QATuple> tuples;

  // Follow the alias chain to a live rule id.
  std::string resolve(const std::string& rule_id) const;
};

struct ChangeSet {
  std::vector<ExperienceRule> adds;
  std::vector<ExperienceRule> updates;
  std::vector<std::pair<std::string, std::string>> merges;  // (a, b) -> min survives
  std::string config_digest;
  std::vector<Cluster> clusters;
  std::vector<QATuple> tuples;
};

// Single-writer, many-reader directory store:
//   manifest.json                      {latest_version, versions:[...]}
//   rules-<v>.jsonl                    one ExperienceRule per line, keys sorted
//   aliases-<v>.json                   {old_id: surviving_id}
//   clusters-<v>.jsonl / tuples-<v>.jsonl   warm-start state
// Commits are atomic (write-temp-then-rename).
class ExperienceStore {
 public:
  // Opens an existing store or initializes an empty one at `dir`.
  static ExperienceStore open(const std::string& dir);

  int latest_version() const { return latest_version_; }
  bool empty() const { return latest_version_ < 0; }

  // Throws VersionGapError when the manifest references a missing file and
  // CorruptManifestError when a referenced file does not parse.
  ExperienceBaseVersion load(int version) const;
  ExperienceBaseVersion latest() const;

  // `parent` must be the latest version (StaleParentError otherwise). A merge
  // (a, b) keeps min(a, b), unions the citation sets and records the alias.
  ExperienceBaseVersion commit(const ExperienceBaseVersion& parent,
                               const ChangeSet& changes);

  const std::string& dir() const { return dir_; }

 private:
  explicit ExperienceStore(std::string dir) : dir_(std::move(dir)) {}

  std::string dir_;
  int latest_version_ = -1;
};

}  // namespace webexpert
