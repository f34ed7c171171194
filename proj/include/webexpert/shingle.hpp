// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <string_view>

namespace webexpert {

// Jaccard similarity of the character n-gram sets of a and b. Symmetric.
// Strings shorter than n have empty shingle sets; those compare 1.0 when the
// strings are byte-identical, else 0.0. Throws EmptyTextError on empty input.
double shingle_jaccard(std::string_view a, std::string_view b, std::size_t n = 5);

}  // namespace webexpert
