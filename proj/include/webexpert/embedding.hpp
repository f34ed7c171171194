// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "webexpert/parallel.hpp"

namespace webexpert {

// Unit-L2-norm dense text representation. Dimension is fixed per base
// (kDefaultEmbeddingDim unless configured otherwise).
struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;

  bool operator==(const Embedding&) const = default;
};

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

// Deterministic hashed character n-gram embedder. The text is lowercased,
// whitespace-squeezed and wrapped in '#' boundary markers; every character
// 3/4/5-gram is feature-hashed (FNV-1a) into one of `dim` signed buckets,
// bucket magnitudes are damped sublinearly (sign(w) * log1p(|w|)) and the
// result is L2-normalized. Same text always yields the identical vector.
//
// Throws EmptyTextError when the trimmed text is empty.
Embedding embed_text(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

// Cosine similarity of two equal-dimension vectors, clamped to [-1, 1].
// Throws DimensionMismatchError on unequal dimensions.
double cosine(const Embedding& u, const Embedding& v);

// Map-style batch kernel; identical output in Serial and Parallel mode.
std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                   std::size_t dim = kDefaultEmbeddingDim,
                                   Exec exec = Exec::Parallel);

// Renormalize in place to unit L2 norm; throws DegenerateVectorError when
// the norm is below 1e-12.
void renormalize(Embedding& e);

}  // namespace webexpert
