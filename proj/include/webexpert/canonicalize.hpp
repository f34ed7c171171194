// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <string>
#include <vector>

#include "webexpert/embedding.hpp"
#include "webexpert/types.hpp"

namespace webexpert {

// One delexicalization rule: an ECMAScript regex applied (globally) to the
// lowercased question, replacing matches with a placeholder such as <YEAR>.
struct DelexRule {
  std::string pattern;
  std::string replace;
};

// Built-in rule order: quoted entities -> <ENT>, years -> <YEAR>,
// remaining numbers -> <NUM>.
std::vector<DelexRule> default_delex_rules();

// Lowercase (placeholders inside <> preserved), strip punctuation, collapse
// whitespace, then apply the delex rules in order. Idempotent.
// Throws EmptyTextError when q is empty after trimming.
std::string canonicalize_question(const std::string& q,
                                  const std::vector<DelexRule>& rules);

// Fill canonical_intent on every tuple.
void canonicalize_tuples(std::vector<QATuple>& tuples,
                         const std::vector<DelexRule>& rules);

// Union-find grouping over pairs whose canonical-intent embeddings reach the
// cosine threshold. Every tuple lands in exactly one group; groups are sorted
// by smallest member id, members sorted by id.
std::vector<std::vector<std::string>> mine_paraphrase_groups(
    const std::vector<QATuple>& tuples, double threshold,
    std::size_t dim = kDefaultEmbeddingDim, Exec exec = Exec::Parallel);

}  // namespace webexpert
