#include "locaudit/grading.hpp"

#include "locaudit/error.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

NormalizedText normalize_with_origins(std::u32string_view input) {
    NormalizedText out;
    out.text.reserve(input.size());
    out.origin.reserve(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        for (char32_t c : text::fold_case(input[i])) {
            if (text::is_whitespace(c) || text::is_punctuation(c)) continue;
            out.text.push_back(c);
            out.origin.push_back(i);
        }
    }
    return out;
}

std::string normalize_answer(std::string_view input) {
    return text::encode_utf8(normalize_with_origins(text::decode_utf8(input)).text);
}

bool grade(std::string_view prediction, std::string_view gold) {
    if (gold.empty()) throw ValidationError("gold answer must be non-empty");
    return normalize_answer(prediction) == normalize_answer(gold);
}

}  // namespace locaudit
