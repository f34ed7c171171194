// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/canonicalize.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <regex>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

std::vector<DelexRule> default_delex_rules() {
  return {
      {R"rx("([^"]*)"|'([^']*)')rx", "<ENT>"},
      {R"(\b(1[7-9]|20)[0-9]{2}\b)", "<YEAR>"},
      {R"(\b[0-9]+(\.[0-9]+)?\b)", "<NUM>"},
  };
}

namespace {

// Lowercase and drop punctuation, leaving <PLACEHOLDER> spans untouched so a
// second pass is a no-op.
std::string fold_surface(const std::string& q) {
  std::string out;
  out.reserve(q.size());
  std::size_t i = 0;
  while (i < q.size()) {
    char c = q[i];
    if (c == '<') {
      std::size_t close = q.find('>', i);
      if (close != std::string::npos) {
        out.append(q, i, close - i + 1);
        i = close + 1;
        continue;
      }
    }
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || std::isspace(uc) || c == '\'' || c == '"') {
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      out.push_back(' ');
    }
    ++i;
  }
  return out;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::string canonicalize_question(const std::string& q,
                                  const std::vector<DelexRule>& rules) {
  if (squeeze_ws(q).empty()) {
    throw EmptyTextError("canonicalize_question: empty question");
  }
  std::string s = fold_surface(q);
  for (const auto& rule : rules) {
    std::regex re(rule.pattern, std::regex::ECMAScript);
    s = std::regex_replace(s, re, rule.replace);
  }
  // Quotes only mattered for the <ENT> rule; drop any stragglers.
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\'') {
      cleaned.push_back(' ');
    } else {
      cleaned.push_back(c);
    }
  }
  return squeeze_ws(cleaned);
}

void canonicalize_tuples(std::vector<QATuple>& tuples,
                         const std::vector<DelexRule>& rules) {
  for (auto& t : tuples) {
    t.canonical_intent = canonicalize_question(t.question, rules);
  }
}

std::vector<std::vector<std::string>> mine_paraphrase_groups(
    const std::vector<QATuple>& tuples, double threshold, std::size_t dim,
    Exec exec) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw InvalidConfigError("mine_paraphrase_groups: threshold must be in (0,1]");
  }
  const std::size_t n = tuples.size();
  std::vector<std::string> intents(n);
  for (std::size_t i = 0; i < n; ++i) {
    intents[i] = tuples[i].canonical_intent.empty()
                     ? tuples[i].question
                     : tuples[i].canonical_intent;
  }
  auto embs = embed_batch(intents, dim, exec);

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (cosine(embs[i], embs[j]) >= threshold) uf.unite(i, j);
    }
  }

  std::map<std::size_t, std::vector<std::string>> by_root;
  for (std::size_t i = 0; i < n; ++i) {
    by_root[uf.find(i)].push_back(tuples[i].id);
  }
  std::vector<std::vector<std::string>> groups;
  for (auto& [root, ids] : by_root) {
    (void)root;
    std::sort(ids.begin(), ids.end());
    groups.push_back(std::move(ids));
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

}  // namespace webexpert
