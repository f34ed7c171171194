// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/shingle.hpp"

#include <set>
#include <string>

#include "webexpert/errors.hpp"

namespace webexpert {

namespace {

std::set<std::string> shingles(std::string_view s, std::size_t n) {
  std::set<std::string> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    out.insert(std::string(s.substr(i, n)));
  }
  return out;
}

}  // namespace

double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n) {
  if (a.empty() || b.empty()) {
    throw EmptyTextError("shingle_jaccard: empty input string");
  }
  auto sa = shingles(a, n);
  auto sb = shingles(b, n);
  if (sa.empty() || sb.empty()) {
    return a == b ? 1.0 : 0.0;
  }
  std::size_t inter = 0;
  for (const auto& g : sa) {
    if (sb.count(g)) ++inter;
  }
  std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace webexpert
