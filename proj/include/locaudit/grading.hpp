#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace locaudit {

// Exact-match answer canonicalization: case fold, drop Unicode whitespace,
// drop general-category P* characters. Letters, digits, marks and symbols
// (currency, math) survive. Idempotent.
std::string normalize_answer(std::string_view text);

// Same canonical form as normalize_answer, as code points, together with the
// index of the originating input code point for every output code point.
struct NormalizedText {
    std::u32string text;
    std::vector<std::size_t> origin;
};
NormalizedText normalize_with_origins(std::u32string_view text);

// normalize(prediction) == normalize(gold). Throws ValidationError on empty gold.
bool grade(std::string_view prediction, std::string_view gold);

}  // namespace locaudit
