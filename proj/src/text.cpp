// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/text.hpp"

#include <cctype>

namespace webexpert {

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string lower_ascii(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string squeeze_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;  // leading whitespace dropped
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(c));
      in_ws = false;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> toks;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      toks.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
      auto s = squeeze_ws(cur);
      if (!s.empty()) out.push_back(s);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  auto s = squeeze_ws(cur);
  if (!s.empty()) out.push_back(s);
  return out;
}

bool is_year_token(std::string_view tok) {
  if (tok.size() != 4) return false;
  for (char c : tok) {
    if (c < '0' || c > '9') return false;
  }
  int century = (tok[0] - '0') * 10 + (tok[1] - '0');
  return century >= 17 && century <= 20;
}

bool is_quarter_token(std::string_view tok) {
  return tok.size() == 2 && tok[0] == 'q' && tok[1] >= '1' && tok[1] <= '4';
}

}  // namespace webexpert
