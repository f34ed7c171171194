// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace webexpert {

struct TimeInterval {
  std::optional<std::string> start;  // ISO-8601 date
  std::optional<std::string> end;

  bool open() const { return !start && !end; }
  bool operator==(const TimeInterval&) const = default;
};

inline constexpr const char* kUniversalRegion = "universal";

// The (time, region, policy, L2 industry) facet tuple plus free-form extras.
struct FacetSet {
  std::optional<TimeInterval> time;
  std::optional<std::string> time_raw;  // surface mention behind `time`
  std::optional<std::string> region;    // gazetteer canonical id
  std::optional<std::string> policy;    // "issuer:identifier"
  std::optional<std::string> industry;  // L2 taxonomy label
  std::map<std::string, std::string> extras;

  bool operator==(const FacetSet&) const = default;
};

// Induced facet vocabulary: facet name -> (term, z-score) candidates, z desc.
struct FacetVocab {
  std::map<std::string, std::vector<std::pair<std::string, double>>> candidates;

  double z_of(const std::string& term) const;
  bool contains(const std::string& facet, const std::string& term) const;
};

// Active facets of a retrieved experience set with their keyword expansions.
struct FacetIndicatorMap {
  std::map<std::string, std::vector<std::string>> keywords;

  bool empty() const { return keywords.empty(); }
  bool matches_token(const std::string& token) const;
};

// Normalization tables: gazetteer, two-level industry taxonomy and policy
// reference patterns. All ship as editable JSON data files; builtin() is the
// compiled-in copy of the defaults.
struct FacetTables {
  std::map<std::string, std::string> gazetteer;  // alias -> canonical region id
  std::map<std::string, std::vector<std::string>> taxonomy;  // L1 -> [L2 labels]
  std::map<std::string, std::string> industry_aliases;       // alias -> L2 label
  struct PolicyPattern {
    std::string pattern;  // ECMAScript regex over lowercased text
    std::string issuer;
  };
  std::vector<PolicyPattern> policy_patterns;

  std::vector<std::string> region_aliases(const std::string& canonical) const;
  std::vector<std::string> industry_alias_list(const std::string& label) const;

  static FacetTables builtin();
  static FacetTables load(const std::string& gazetteer_path,
                          const std::string& taxonomy_path,
                          const std::string& policy_patterns_path);
};

// Monroe-style log-odds ratio with an informative Dirichlet prior taken from
// the background corpus. For term t with domain count yd (domain total nd)
// and background count yb (background total nb), with per-term prior
//   a_t = prior_scale * (yb + 0.01) / (nb + 0.01 * V)      (V = union vocab)
// and a0 = sum of a_t, the score is
//   delta_t = ln((yd + a_t) / (nd + a0 - yd - a_t))
//           - ln((yb + a_t) / (nb + a0 - yb - a_t))
//   z_t = delta_t / sqrt(1/(yd + a_t) + 1/(yb + a_t))
// Terms with z >= z_cut are kept and routed to a facet by pattern class.
// Throws EmptyCorpusError when either corpus is empty.
FacetVocab induce_facet_vocab(const std::map<std::string, std::size_t>& domain_counts,
                              const std::map<std::string, std::size_t>& background_counts,
                              double z_cut, const FacetTables& tables,
                              double prior_scale = 10.0);

// Normalize raw facet mentions into a FacetSet: quarters/years to ISO-8601
// intervals, region names to gazetteer ids, policy mentions to
// "issuer:identifier". Conflicting values for one facet keep the highest-z
// term; everything else (and any unresolvable mention) lands in extras.
FacetSet normalize_facets(const std::vector<std::string>& raw_mentions,
                          const FacetVocab& vocab, const FacetTables& tables);

// Facet-absent rules present as "ongoing principle" / "universal context":
// fill missing time with the open interval and missing region with the
// universal sentinel.
void apply_sentinel_defaults(FacetSet& facets);

// Scan text for facet-shaped mentions (time patterns, gazetteer aliases,
// policy patterns, taxonomy aliases, vocab terms), in occurrence order.
std::vector<std::string> extract_facet_mentions(const std::string& text,
                                                const FacetVocab& vocab,
                                                const FacetTables& tables);

// True when the token looks like a facet value (year/quarter pattern or an
// alias in one of the tables); used for off-facet token down-weighting.
bool is_facet_pattern_token(const std::string& token, const FacetTables& tables);

struct ExperienceRule;  // distill.hpp

// Union of facet indicators over the given rules (sentinel values excluded),
// each with its keyword expansion. Throws NoExperiencesError on empty input.
FacetIndicatorMap facet_indicators(const std::vector<ExperienceRule>& experiences,
                                   const FacetTables& tables);

// Priority-ordered (facet, query-slot value) list of a single facet set:
// time, region, policy, industry; sentinels skipped.
std::vector<std::pair<std::string, std::string>> ordered_facet_values(
    const FacetSet& facets);

nlohmann::json facet_set_to_json(const FacetSet& f);
FacetSet facet_set_from_json(const nlohmann::json& j);

}  // namespace webexpert
