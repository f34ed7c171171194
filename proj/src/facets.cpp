// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/facets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webexpert/distill.hpp"
#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

using nlohmann::json;

double FacetVocab::z_of(const std::string& term) const {
  for (const auto& [facet, terms] : candidates) {
    (void)facet;
    for (const auto& [t, z] : terms) {
      if (t == term) return z;
    }
  }
  return 0.0;
}

bool FacetVocab::contains(const std::string& facet, const std::string& term) const {
  auto it = candidates.find(facet);
  if (it == candidates.end()) return false;
  for (const auto& [t, z] : it->second) {
    (void)z;
    if (t == term) return true;
  }
  return false;
}

bool FacetIndicatorMap::matches_token(const std::string& token) const {
  for (const auto& [facet, kws] : keywords) {
    (void)facet;
    for (const auto& kw : kws) {
      for (const auto& kt : tokenize(kw)) {
        if (kt == token) return true;
      }
    }
  }
  return false;
}

std::vector<std::string> FacetTables::region_aliases(
    const std::string& canonical) const {
  std::vector<std::string> out;
  for (const auto& [alias, canon] : gazetteer) {
    if (canon == canonical) out.push_back(alias);
  }
  return out;
}

std::vector<std::string> FacetTables::industry_alias_list(
    const std::string& label) const {
  std::vector<std::string> out;
  for (const auto& [alias, lab] : industry_aliases) {
    if (lab == label) out.push_back(alias);
  }
  return out;
}

FacetTables FacetTables::builtin() {
  FacetTables t;
  t.gazetteer = {
      {"universal", "universal"},
      {"universal context", "universal"},
      {"global", "universal"},
      {"ontario", "ontario"},
      {"on", "ontario"},
      {"quebec", "quebec"},
      {"qc", "quebec"},
      {"california", "california"},
      {"ca", "california"},
      {"texas", "texas"},
      {"tx", "texas"},
      {"bavaria", "bavaria"},
      {"new york", "new-york"},
      {"ny", "new-york"},
      {"singapore", "singapore"},
      {"sg", "singapore"},
      {"united kingdom", "united-kingdom"},
      {"uk", "united-kingdom"},
      {"united states", "united-states"},
      {"usa", "united-states"},
      {"us", "united-states"},
  };
  t.taxonomy = {
      {"finance", {"asset-management", "retail-banking", "insurance"}},
      {"healthcare", {"pharmaceuticals", "medical-devices", "clinical-care"}},
      {"energy", {"renewables", "oil-gas", "utilities"}},
      {"technology", {"semiconductors", "software", "cloud-services"}},
  };
  t.industry_aliases = {
      {"asset-management", "asset-management"},
      {"asset management", "asset-management"},
      {"retail-banking", "retail-banking"},
      {"retail banking", "retail-banking"},
      {"insurance", "insurance"},
      {"pharmaceuticals", "pharmaceuticals"},
      {"pharma", "pharmaceuticals"},
      {"medical-devices", "medical-devices"},
      {"medical devices", "medical-devices"},
      {"clinical-care", "clinical-care"},
      {"clinical care", "clinical-care"},
      {"renewables", "renewables"},
      {"renewable energy", "renewables"},
      {"clean energy", "renewables"},
      {"oil-gas", "oil-gas"},
      {"oil and gas", "oil-gas"},
      {"utilities", "utilities"},
      {"semiconductors", "semiconductors"},
      {"chips", "semiconductors"},
      {"software", "software"},
      {"cloud-services", "cloud-services"},
      {"cloud services", "cloud-services"},
  };
  t.policy_patterns = {
      {R"(sec rule ([0-9][0-9a-z\-]*))", "sec"},
      {R"(regulation ([a-z]+)\b)", "us-fed"},
      {R"(basel (iv|iii|ii|i)\b)", "bcbs"},
      {R"(mifid (ii|i)\b)", "esma"},
      {R"(ifrs ([0-9]+))", "iasb"},
      {R"(directive ([0-9]{4}/[0-9]+))", "eu"},
      {R"(\bgdpr\b)", "eu"},
  };
  return t;
}

FacetTables FacetTables::load(const std::string& gazetteer_path,
                              const std::string& taxonomy_path,
                              const std::string& policy_patterns_path) {
  FacetTables t;
  auto read_json = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open facet table: " + path);
    return json::parse(in);
  };
  json g = read_json(gazetteer_path);
  for (auto& [alias, canon] : g.at("aliases").items()) {
    t.gazetteer[lower_ascii(alias)] = canon.get<std::string>();
  }
  json tax = read_json(taxonomy_path);
  for (auto& [l1, l2s] : tax.at("taxonomy").items()) {
    t.taxonomy[l1] = l2s.get<std::vector<std::string>>();
  }
  for (auto& [alias, label] : tax.at("aliases").items()) {
    t.industry_aliases[lower_ascii(alias)] = label.get<std::string>();
  }
  json p = read_json(policy_patterns_path);
  for (auto& entry : p.at("patterns")) {
    t.policy_patterns.push_back({entry.at("pattern").get<std::string>(),
                                 entry.at("issuer").get<std::string>()});
  }
  return t;
}

namespace {

const std::regex& year_re() {
  static const std::regex re(R"(^(1[7-9]|20)[0-9]{2}$)");
  return re;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return c >= '0' && c <= '9'; });
}

std::string hyphenate(const std::string& s) {
  std::string out;
  for (char c : lower_ascii(s)) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(c);
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

struct ResolvedMention {
  std::string facet;  // time/region/policy/industry/extras
  std::string value;  // normalized value
  TimeInterval interval;  // valid when facet == "time"
  std::string raw;
};

std::optional<TimeInterval> parse_time(const std::string& m) {
  static const std::regex quarter_re(R"(^q([1-4])[ ]*((1[7-9]|20)[0-9]{2})$)");
  static const std::regex quarter_re2(R"(^((1[7-9]|20)[0-9]{2})[ ]*q([1-4])$)");
  static const std::regex range_re(R"(^((1[7-9]|20)[0-9]{2})[ ]*(?:-|to|\.\.)[ ]*((1[7-9]|20)[0-9]{2})$)");
  static const std::regex iso_re(R"(^([0-9]{4}-[0-9]{2}-[0-9]{2})(?:[ ]*(?:/|\.\.)[ ]*([0-9]{4}-[0-9]{2}-[0-9]{2}))?$)");

  if (m == "ongoing principle" || m == "ongoing" || m == "timeless") {
    return TimeInterval{};  // open
  }
  std::smatch sm;
  std::string quarter, year;
  if (std::regex_match(m, sm, quarter_re)) {
    quarter = sm[1].str();
    year = sm[2].str();
  } else if (std::regex_match(m, sm, quarter_re2)) {
    year = sm[1].str();
    quarter = sm[3].str();
  }
  if (!quarter.empty()) {
    static const char* starts[] = {"-01-01", "-04-01", "-07-01", "-10-01"};
    static const char* ends[] = {"-03-31", "-06-30", "-09-30", "-12-31"};
    int qi = quarter[0] - '1';
    return TimeInterval{year + starts[qi], year + ends[qi]};
  }
  if (std::regex_match(m, sm, range_re)) {
    return TimeInterval{sm[1].str() + "-01-01", sm[3].str() + "-12-31"};
  }
  if (std::regex_match(m, year_re())) {
    return TimeInterval{m + "-01-01", m + "-12-31"};
  }
  if (std::regex_match(m, sm, iso_re)) {
    std::string start = sm[1].str();
    std::string end = sm[2].matched ? sm[2].str() : start;
    return TimeInterval{start, end};
  }
  return std::nullopt;
}

std::optional<ResolvedMention> resolve_mention(const std::string& raw,
                                               const FacetTables& tables) {
  std::string m = squeeze_ws(lower_ascii(raw));
  if (m.empty()) return std::nullopt;

  if (auto t = parse_time(m)) {
    ResolvedMention r;
    r.facet = "time";
    r.interval = *t;
    r.value = t->open() ? "open" : (*t->start + "/" + *t->end);
    r.raw = m;
    return r;
  }
  if (auto it = tables.gazetteer.find(m); it != tables.gazetteer.end()) {
    return ResolvedMention{"region", it->second, {}, m};
  }
  for (const auto& pp : tables.policy_patterns) {
    std::regex re(pp.pattern, std::regex::ECMAScript);
    std::smatch sm;
    if (std::regex_search(m, sm, re)) {
      std::string ident = sm.size() > 1 && sm[1].matched ? sm[1].str() : sm[0].str();
      return ResolvedMention{"policy", pp.issuer + ":" + hyphenate(ident), {}, m};
    }
  }
  if (auto it = tables.industry_aliases.find(m); it != tables.industry_aliases.end()) {
    return ResolvedMention{"industry", it->second, {}, m};
  }
  return std::nullopt;
}

}  // namespace

FacetVocab induce_facet_vocab(const std::map<std::string, std::size_t>& domain_counts,
                              const std::map<std::string, std::size_t>& background_counts,
                              double z_cut, const FacetTables& tables,
                              double prior_scale) {
  if (domain_counts.empty() || background_counts.empty()) {
    throw EmptyCorpusError("induce_facet_vocab: empty corpus");
  }
  double nd = 0.0, nb = 0.0;
  std::set<std::string> vocab_union;
  for (const auto& [t, c] : domain_counts) {
    nd += static_cast<double>(c);
    vocab_union.insert(t);
  }
  for (const auto& [t, c] : background_counts) {
    nb += static_cast<double>(c);
    vocab_union.insert(t);
  }
  const double v_size = static_cast<double>(vocab_union.size());

  auto bg_count = [&](const std::string& t) -> double {
    auto it = background_counts.find(t);
    return it == background_counts.end() ? 0.0 : static_cast<double>(it->second);
  };
  auto prior = [&](const std::string& t) {
    return prior_scale * (bg_count(t) + 0.01) / (nb + 0.01 * v_size);
  };
  double a0 = 0.0;
  for (const auto& t : vocab_union) a0 += prior(t);

  FacetVocab out;
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& [term, yd_raw] : domain_counts) {
    double yd = static_cast<double>(yd_raw);
    double yb = bg_count(term);
    double at = prior(term);
    double delta = std::log((yd + at) / (nd + a0 - yd - at)) -
                   std::log((yb + at) / (nb + a0 - yb - at));
    double sigma = std::sqrt(1.0 / (yd + at) + 1.0 / (yb + at));
    double z = delta / sigma;
    if (z >= z_cut) scored.push_back({lower_ascii(term), z});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  for (const auto& [term, z] : scored) {
    std::string facet = "extras";
    if (auto r = resolve_mention(term, tables)) {
      facet = r->facet;
    } else {
      // multiword time-ish terms individually shaped like years/quarters
      auto toks = tokenize(term);
      bool timeish = !toks.empty() &&
                     std::all_of(toks.begin(), toks.end(), [](const std::string& t) {
                       return is_year_token(t) || is_quarter_token(t);
                     });
      if (timeish) facet = "time";
    }
    out.candidates[facet].push_back({term, z});
  }
  return out;
}

FacetSet normalize_facets(const std::vector<std::string>& raw_mentions,
                          const FacetVocab& vocab, const FacetTables& tables) {
  struct Candidate {
    ResolvedMention m;
    double z;
    std::size_t order;
  };
  std::map<std::string, std::vector<Candidate>> by_facet;
  std::vector<std::pair<std::string, std::size_t>> unresolved;

  std::size_t order = 0;
  for (const auto& raw : raw_mentions) {
    std::string m = squeeze_ws(lower_ascii(raw));
    if (m.empty()) continue;
    if (auto r = resolve_mention(m, tables)) {
      by_facet[r->facet].push_back({*r, vocab.z_of(m), order});
    } else if (vocab.z_of(m) > 0.0) {
      // known vocab term without a structured normalization
      ResolvedMention r{"extras", m, {}, m};
      by_facet["extras"].push_back({r, vocab.z_of(m), order});
    } else {
      unresolved.push_back({raw, order});
    }
    ++order;
  }

  FacetSet out;
  for (auto& [facet, cands] : by_facet) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.z != b.z) return a.z > b.z;
      return a.order < b.order;
    });
    // Dedup identical values while preserving the winner-first order.
    std::vector<Candidate> uniq;
    for (const auto& c : cands) {
      bool seen = false;
      for (const auto& u : uniq) {
        if (u.m.value == c.m.value) {
          seen = true;
          break;
        }
      }
      if (!seen) uniq.push_back(c);
    }
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      const auto& c = uniq[i];
      if (i == 0 && facet == "time") {
        out.time = c.m.interval;
        out.time_raw = c.m.raw;
      } else if (i == 0 && facet == "region") {
        out.region = c.m.value;
      } else if (i == 0 && facet == "policy") {
        out.policy = c.m.value;
      } else if (i == 0 && facet == "industry") {
        out.industry = c.m.value;
      } else {
        out.extras[facet + "#" + std::to_string(i)] = c.m.raw;
      }
    }
  }
  for (std::size_t i = 0; i < unresolved.size(); ++i) {
    out.extras["unresolved#" + std::to_string(i)] = unresolved[i].first;
  }
  return out;
}

void apply_sentinel_defaults(FacetSet& facets) {
  if (!facets.time) {
    facets.time = TimeInterval{};  // open interval: "ongoing principle"
    facets.time_raw = "ongoing principle";
  }
  if (!facets.region) {
    facets.region = kUniversalRegion;
  }
}

std::vector<std::string> extract_facet_mentions(const std::string& text,
                                                const FacetVocab& vocab,
                                                const FacetTables& tables) {
  std::string low = squeeze_ws(lower_ascii(text));
  auto toks = tokenize(low);
  std::vector<std::string> mentions;
  auto push = [&](const std::string& m) {
    if (std::find(mentions.begin(), mentions.end(), m) == mentions.end()) {
      mentions.push_back(m);
    }
  };

  // Token bigrams first so "q2 2023" and "new york" win over their pieces.
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    std::string bi = toks[i] + " " + toks[i + 1];
    if (resolve_mention(bi, tables) || vocab.z_of(bi) > 0.0) push(bi);
  }
  for (const auto& t : toks) {
    bool inside_bigram = false;
    for (const auto& m : mentions) {
      auto mt = tokenize(m);
      if (std::find(mt.begin(), mt.end(), t) != mt.end()) {
        inside_bigram = true;
        break;
      }
    }
    if (inside_bigram) continue;
    if (resolve_mention(t, tables) || vocab.z_of(t) > 0.0) push(t);
  }
  return mentions;
}

bool is_facet_pattern_token(const std::string& token, const FacetTables& tables) {
  if (is_year_token(token) || is_quarter_token(token)) return true;
  if (tables.gazetteer.count(token)) return true;
  if (tables.industry_aliases.count(token)) return true;
  for (const auto& pp : tables.policy_patterns) {
    std::regex re(pp.pattern, std::regex::ECMAScript);
    if (std::regex_search(token, re)) return true;
  }
  return false;
}

FacetIndicatorMap facet_indicators(const std::vector<ExperienceRule>& experiences,
                                   const FacetTables& tables) {
  if (experiences.empty()) {
    throw NoExperiencesError("facet_indicators: no experiences");
  }
  FacetIndicatorMap phi;
  auto add = [&](const std::string& facet, const std::string& kw) {
    if (kw.empty()) return;
    auto& v = phi.keywords[facet];
    if (std::find(v.begin(), v.end(), kw) == v.end()) v.push_back(kw);
  };

  for (const auto& exp : experiences) {
    const FacetSet& f = exp.facets;
    if (f.time && !f.time->open()) {
      std::string sy = f.time->start->substr(0, 4);
      std::string ey = f.time->end->substr(0, 4);
      add("time", sy);
      if (ey != sy) add("time", ey);
      if (f.time_raw && !all_digits(*f.time_raw)) add("time", *f.time_raw);
    }
    if (f.region && *f.region != kUniversalRegion) {
      add("region", *f.region);
      for (const auto& a : tables.region_aliases(*f.region)) add("region", a);
    }
    if (f.policy) {
      auto colon = f.policy->find(':');
      std::string issuer = f.policy->substr(0, colon);
      std::string ident = colon == std::string::npos ? "" : f.policy->substr(colon + 1);
      std::replace(ident.begin(), ident.end(), '-', ' ');
      add("policy", ident);
      add("policy", issuer);
    }
    if (f.industry) {
      add("industry", *f.industry);
      for (const auto& a : tables.industry_alias_list(*f.industry)) add("industry", a);
    }
  }
  return phi;
}

std::vector<std::pair<std::string, std::string>> ordered_facet_values(
    const FacetSet& f) {
  std::vector<std::pair<std::string, std::string>> out;
  if (f.time && !f.time->open()) {
    out.push_back({"time", f.time->start->substr(0, 4)});
  }
  if (f.region && *f.region != kUniversalRegion) {
    out.push_back({"region", *f.region});
  }
  if (f.policy) {
    auto colon = f.policy->find(':');
    std::string ident = colon == std::string::npos ? *f.policy : f.policy->substr(colon + 1);
    std::replace(ident.begin(), ident.end(), '-', ' ');
    out.push_back({"policy", ident});
  }
  if (f.industry) {
    out.push_back({"industry", *f.industry});
  }
  return out;
}

json facet_set_to_json(const FacetSet& f) {
  json j;
  if (f.time) {
    json t;
    t["start"] = f.time->start ? json(*f.time->start) : json(nullptr);
    t["end"] = f.time->end ? json(*f.time->end) : json(nullptr);
    j["time"] = t;
  } else {
    j["time"] = nullptr;
  }
  j["time_raw"] = f.time_raw ? json(*f.time_raw) : json(nullptr);
  j["region"] = f.region ? json(*f.region) : json(nullptr);
  j["policy"] = f.policy ? json(*f.policy) : json(nullptr);
  j["industry"] = f.industry ? json(*f.industry) : json(nullptr);
  j["extras"] = f.extras;
  return j;
}

FacetSet facet_set_from_json(const json& j) {
  FacetSet f;
  if (j.contains("time") && !j["time"].is_null()) {
    TimeInterval t;
    if (!j["time"]["start"].is_null()) t.start = j["time"]["start"].get<std::string>();
    if (!j["time"]["end"].is_null()) t.end = j["time"]["end"].get<std::string>();
    f.time = t;
  }
  if (j.contains("time_raw") && !j["time_raw"].is_null()) {
    f.time_raw = j["time_raw"].get<std::string>();
  }
  if (j.contains("region") && !j["region"].is_null()) {
    f.region = j["region"].get<std::string>();
  }
  if (j.contains("policy") && !j["policy"].is_null()) {
    f.policy = j["policy"].get<std::string>();
  }
  if (j.contains("industry") && !j["industry"].is_null()) {
    f.industry = j["industry"].get<std::string>();
  }
  if (j.contains("extras")) {
    f.extras = j["extras"].get<std::map<std::string, std::string>>();
  }
  return f;
}

}  // namespace webexpert
