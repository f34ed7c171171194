// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "webexpert/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "webexpert/errors.hpp"
#include "webexpert/text.hpp"

namespace webexpert {

double Embedding::norm() const {
  double s = 0.0;
  for (double x : values) s += x * x;
  return std::sqrt(s);
}

namespace {

// Fills a preallocated, zeroed bucket array. Split out so the batch kernel
// can run allocation-free inside the parallel region (per-item heap traffic
// serializes badly under the allocator lock).
void embed_text_into(std::string_view text, double* values, std::size_t dim) {
  // Single-pass lowercase + whitespace squeeze into a reused buffer; '#'
  // boundary markers keep 1- and 2-character inputs representable.
  thread_local std::string padded;
  padded.clear();
  padded.push_back('#');
  bool in_ws = true, any = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_ws = true;
    } else {
      if (in_ws && any) padded.push_back(' ');
      padded.push_back(static_cast<char>(std::tolower(c)));
      in_ws = false;
      any = true;
    }
  }
  if (!any) {
    throw EmptyTextError("embed_text: empty text after whitespace trim");
  }
  padded.push_back('#');

  for (std::size_t n = 3; n <= 5; ++n) {
    if (padded.size() < n) continue;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, n));
      std::size_t bucket = static_cast<std::size_t>(h % dim);
      double sign = ((h >> 32) & 1ULL) ? 1.0 : -1.0;
      values[bucket] += sign;
    }
  }
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double w = (values[i] >= 0.0 ? 1.0 : -1.0) * std::log1p(std::abs(values[i]));
    values[i] = w;
    sum_sq += w * w;
  }
  double nrm = std::sqrt(sum_sq);
  if (nrm < 1e-15) {
    // All grams cancelled; fall back to a single deterministic bucket.
    values[static_cast<std::size_t>(fnv1a64(padded) % dim)] = 1.0;
    nrm = 1.0;
  }
  for (std::size_t i = 0; i < dim; ++i) values[i] /= nrm;
}

}  // namespace

Embedding embed_text(std::string_view text, std::size_t dim) {
  Embedding e;
  e.values.assign(dim, 0.0);
  embed_text_into(text, e.values.data(), dim);
  return e;
}

double cosine(const Embedding& u, const Embedding& v) {
  if (u.dim() != v.dim()) {
    throw DimensionMismatchError("cosine: dimensions " + std::to_string(u.dim()) +
                                 " vs " + std::to_string(v.dim()));
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu <= 0.0 || nv <= 0.0) return 0.0;
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(c, -1.0, 1.0);
}

std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                   std::size_t dim, Exec exec) {
  std::vector<Embedding> out(texts.size());
  for (auto& e : out) e.values.assign(dim, 0.0);  // allocate outside the loop
  parallel_for(texts.size(), exec, [&](std::size_t i) {
    embed_text_into(texts[i], out[i].values.data(), dim);
  });
  return out;
}

void renormalize(Embedding& e) {
  double nrm = e.norm();
  if (nrm < 1e-12) {
    throw DegenerateVectorError("renormalize: vector norm below 1e-12");
  }
  for (double& w : e.values) w /= nrm;
}

}  // namespace webexpert
