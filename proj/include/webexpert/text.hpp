// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace webexpert {

// FNV-1a, the project-wide stable hash. Deterministic across platforms and
// runs; never use std::hash for anything persisted or seeded.
inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v);

// Lowercase ASCII letters; other bytes pass through.
std::string lower_ascii(std::string_view s);

// Collapse runs of whitespace to single spaces and trim both ends.
std::string squeeze_ws(std::string_view s);

// Lowercase and split on non-alphanumeric bytes. "Q2 2023" -> {"q2","2023"}.
std::vector<std::string> tokenize(std::string_view text);

// Split into sentences on [.!?;] and newlines; trimmed, empties dropped.
std::vector<std::string> split_sentences(std::string_view text);

bool is_year_token(std::string_view tok);
bool is_quarter_token(std::string_view tok);  // q1..q4

}  // namespace webexpert
