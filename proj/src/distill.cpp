// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/distill.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

using nlohmann::json;

namespace {

// Contractions tokenize as e.g. "doesn" + "t", so the bare stems are listed.
const std::set<std::string>& negation_tokens() {
  static const std::set<std::string> toks = {
      "not",  "no",   "never", "cannot", "nor",  "neither", "doesn", "don",
      "isn",  "aren", "won",   "didn",   "wasn", "weren",   "couldn", "shouldn"};
  return toks;
}

const std::set<std::string>& auxiliary_tokens() {
  static const std::set<std::string> toks = {
      "does", "do",  "did",  "is",   "are",  "was", "were",
      "will", "can", "been", "be",   "has",  "have", "had", "t"};
  return toks;
}

// Plural / 3rd-person "s" only; "ss" endings stay ("class", "across").
std::string crude_stem(const std::string& tok) {
  if (tok.size() > 3 && tok.ends_with("s") && !tok.ends_with("ss")) {
    return tok.substr(0, tok.size() - 1);
  }
  return tok;
}

bool contains_any_marker(const std::string& sentence,
                         const std::vector<std::string>& markers) {
  std::string low = " " + lower_ascii(sentence) + " ";
  for (const auto& m : markers) {
    if (low.find(m) != std::string::npos) return true;
  }
  return false;
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

bool is_negated_text(const std::string& text) {
  for (const auto& t : tokenize(text)) {
    if (negation_tokens().count(t)) return true;
  }
  return false;
}

std::string claim_group_key(const std::string& text) {
  std::vector<std::string> kept;
  for (const auto& t : tokenize(text)) {
    if (negation_tokens().count(t) || auxiliary_tokens().count(t)) continue;
    kept.push_back(crude_stem(t));
  }
  std::string key;
  for (const auto& t : kept) {
    if (!key.empty()) key.push_back(' ');
    key += t;
  }
  return key;
}

std::vector<Claim> extract_claims(
    const std::vector<std::pair<std::string, std::string>>& id_answer_pairs) {
  // (key, polarity) -> claim, first surface form wins
  std::map<std::pair<std::string, int>, Claim> agg;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& [id, answer] : id_answer_pairs) {
    std::string squeezed = squeeze_ws(answer);
    if (squeezed.empty()) continue;
    Claim c;
    c.text = squeezed;
    c.polarity = is_negated_text(squeezed) ? Claim::Polarity::Negated
                                           : Claim::Polarity::Positive;
    c.source_ids = {id};
    auto key = std::make_pair(claim_group_key(squeezed),
                              c.polarity == Claim::Polarity::Negated ? 1 : 0);
    auto it = agg.find(key);
    if (it == agg.end()) {
      agg[key] = c;
      order.push_back(key);
    } else {
      it->second.support_count++;
      it->second.source_ids.push_back(id);
    }
  }
  std::vector<Claim> out;
  for (const auto& key : order) out.push_back(agg.at(key));
  return out;
}

ConsistencyResult consistency_filter(const std::vector<Claim>& claims) {
  if (claims.empty()) {
    throw Error("consistency_filter: no claims");
  }
  ConsistencyResult result;
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> group_order;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    std::string key = claim_group_key(claims[i].text);
    if (!groups.count(key)) group_order.push_back(key);
    groups[key].push_back(i);
  }
  for (const auto& key : group_order) {
    const auto& idxs = groups.at(key);
    std::size_t pos = 0, neg = 0;
    for (std::size_t i : idxs) {
      if (claims[i].polarity == Claim::Polarity::Positive) {
        pos += claims[i].support_count;
      } else {
        neg += claims[i].support_count;
      }
    }
    if (pos == neg) {
      for (std::size_t i : idxs) result.flagged.push_back(claims[i]);
      continue;
    }
    Claim::Polarity majority =
        pos > neg ? Claim::Polarity::Positive : Claim::Polarity::Negated;
    for (std::size_t i : idxs) {
      if (claims[i].polarity == majority) {
        result.kept.push_back(claims[i]);
      } else if (claims[i].support_count >= 2) {
        result.folded_caveats.push_back(claims[i]);
      } else {
        result.flagged.push_back(claims[i]);
      }
    }
  }
  return result;
}

RuleDraft summarize_cluster(const std::vector<EvidenceItem>& evidence,
                            const std::vector<std::string>& answers,
                            const std::vector<std::string>& rationales,
                            const Embedding& centroid,
                            const SummarizeOptions& opts, SummarizerPort* port) {
  if (answers.empty() && evidence.empty()) {
    throw EmptyClusterError("summarize_cluster: nothing to summarize");
  }

  if (port != nullptr) {
    SummaryRequest req;
    req.answers = answers;
    req.rationales = rationales;
    for (const auto& e : evidence) req.citations.push_back(e.source.url_or_name);
    req.instructions =
        "Summarize the answers into one concise rule with conditions, core "
        "guidance, edge cases, failure modes and caveats. Prefer "
        "majority-consistent claims; fold minority views into caveats.";
    return port->summarize(req);
  }

  static const std::vector<std::string> condition_markers = {
      " when ", " if ", " assuming ", " provided that ", " unless "};
  static const std::vector<std::string> edge_markers = {
      " except ", "edge case", " only if ", " rare ", "corner case", " outlier"};
  static const std::vector<std::string> failure_markers = {
      " fails ", " fail ", "failure", "breaks down", "risk of", "does not hold",
      "backfires"};

  auto candidate_units = [&](const std::string& text) {
    return opts.sentence_level ? split_sentences(text)
                               : std::vector<std::string>{squeeze_ws(text)};
  };

  RuleDraft draft;

  // Core guidance: most centroid-central answer sentence (evidence text as
  // the answerless fallback), centrality scaled by membership weight.
  double best = -2.0;
  const auto consider = [&](const std::string& unit, double weight) {
    if (unit.empty()) return;
    double c = weight * cosine(embed_text(unit, opts.embedding_dim), centroid);
    if (c > best) {
      best = c;
      draft.core_guidance = unit;
    }
  };
  if (!answers.empty()) {
    for (std::size_t i = 0; i < answers.size(); ++i) {
      double w = i < opts.answer_weights.size() ? opts.answer_weights[i] : 1.0;
      for (const auto& s : candidate_units(answers[i])) consider(s, w);
    }
  } else {
    for (const auto& e : evidence) {
      for (const auto& s : candidate_units(e.text)) consider(s, e.member_weight);
    }
  }

  auto scan_markers = [&](const std::string& text) {
    for (const auto& s : candidate_units(text)) {
      if (contains_any_marker(s, condition_markers)) push_unique(draft.conditions, s);
      if (contains_any_marker(s, edge_markers)) push_unique(draft.edge_cases, s);
      if (contains_any_marker(s, failure_markers)) push_unique(draft.failure_modes, s);
    }
  };
  for (const auto& a : answers) scan_markers(a);
  for (const auto& r : rationales) scan_markers(r);
  for (const auto& e : evidence) scan_markers(e.text);

  if (!answers.empty()) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < answers.size(); ++i) {
      pairs.push_back({std::to_string(i), answers[i]});
    }
    auto claims = extract_claims(pairs);
    if (!claims.empty()) {
      auto filt = consistency_filter(claims);
      for (const auto& c : filt.folded_caveats) push_unique(draft.caveats, c.text);
      for (const auto& c : filt.flagged) push_unique(draft.caveats, c.text);
    }
  }
  return draft;
}

ExperienceRule assemble_rule(const RuleDraft& draft, const Cluster& cluster,
                             const std::vector<EvidenceItem>& selected_evidence,
                             const FacetSet& facets,
                             const std::map<std::string, QATuple>& tuples,
                             int version) {
  if (draft.core_guidance.empty()) {
    throw Error("assemble_rule: draft has no core guidance");
  }

  // Citation union over cluster members.
  std::set<std::string> allowed;
  for (const auto& m : cluster.members) {
    auto it = tuples.find(m.id);
    if (it == tuples.end()) continue;
    for (const auto& c : it->second.citations) allowed.insert(c.url_or_name);
  }

  std::map<std::string, SourceRef> cited;
  double fused_sum = 0.0;
  std::size_t fused_n = 0;
  for (const auto& e : selected_evidence) {
    if (!e.from_citation) continue;
    if (!allowed.count(e.source.url_or_name)) {
      throw CitationLeakError("assemble_rule: source '" + e.source.url_or_name +
                              "' is outside the cluster citation union");
    }
    if (!cited.count(e.source.url_or_name)) cited[e.source.url_or_name] = e.source;
    fused_sum += e.fused_score;
    ++fused_n;
  }
  if (fused_n == 0) {
    for (const auto& e : selected_evidence) {
      fused_sum += e.fused_score;
      ++fused_n;
    }
  }

  ExperienceRule rule;
  rule.rule_id = cluster.cluster_id.starts_with("c-")
                     ? "r-" + cluster.cluster_id.substr(2)
                     : "r-" + cluster.cluster_id;
  rule.rule = draft;
  for (auto& [name, src] : cited) {
    (void)name;
    rule.citations.push_back(src);
  }
  rule.facets = facets;
  rule.provenance_cluster = cluster.cluster_id;
  rule.provenance_version = version;
  rule.confidence = fused_n ? fused_sum / static_cast<double>(fused_n) : 0.0;
  rule.confidence = std::clamp(rule.confidence, 0.0, 1.0);

  const bool core_negated = is_negated_text(draft.core_guidance);
  std::size_t with_answer = 0, agree = 0;
  for (const auto& m : cluster.members) {
    auto it = tuples.find(m.id);
    if (it == tuples.end() || !it->second.answer) continue;
    ++with_answer;
    if (is_negated_text(*it->second.answer) == core_negated) ++agree;
  }
  rule.coverage = with_answer == 0
                      ? 1.0
                      : static_cast<double>(agree) / static_cast<double>(with_answer);
  return rule;
}

std::vector<QATuple> sentence_fallback(const std::vector<std::string>& documents) {
  if (documents.empty()) {
    throw EmptyTextError("sentence_fallback: no documents");
  }
  std::vector<QATuple> out;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    auto sentences = split_sentences(documents[d]);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      QATuple t;
      std::ostringstream id;
      id << "s-" << d << "-" << s;
      t.id = id.str();
      t.question = sentences[s];
      out.push_back(std::move(t));
    }
  }
  if (out.empty()) {
    throw EmptyTextError("sentence_fallback: documents contain no sentences");
  }
  return out;
}

json rule_to_json(const ExperienceRule& r) {
  json j;
  j["rule_id"] = r.rule_id;
  j["rule"] = {{"conditions", r.rule.conditions},
               {"core_guidance", r.rule.core_guidance},
               {"edge_cases", r.rule.edge_cases},
               {"failure_modes", r.rule.failure_modes},
               {"caveats", r.rule.caveats}};
  j["citations"] = json::array();
  for (const auto& c : r.citations) j["citations"].push_back(source_ref_to_json(c));
  j["facets"] = facet_set_to_json(r.facets);
  j["coverage"] = r.coverage;
  j["confidence"] = r.confidence;
  j["provenance"] = {{"cluster_id", r.provenance_cluster},
                     {"version", r.provenance_version}};
  return j;
}

ExperienceRule rule_from_json(const json& j) {
  ExperienceRule r;
  r.rule_id = j.at("rule_id").get<std::string>();
  const auto& d = j.at("rule");
  r.rule.conditions = d.at("conditions").get<std::vector<std::string>>();
  r.rule.core_guidance = d.at("core_guidance").get<std::string>();
  r.rule.edge_cases = d.at("edge_cases").get<std::vector<std::string>>();
  r.rule.failure_modes = d.at("failure_modes").get<std::vector<std::string>>();
  r.rule.caveats = d.at("caveats").get<std::vector<std::string>>();
  for (const auto& c : j.at("citations")) r.citations.push_back(source_ref_from_json(c));
  r.facets = facet_set_from_json(j.at("facets"));
  r.coverage = j.at("coverage").get<double>();
  r.confidence = j.at("confidence").get<double>();
  r.provenance_cluster = j.at("provenance").at("cluster_id").get<std::string>();
  r.provenance_version = j.at("provenance").at("version").get<int>();
  return r;
}

}  // namespace webexpert
