#include "locaudit/language_id.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

TrigramCounts extract_trigrams(std::string_view input) {
    std::u32string cleaned = U" ";
    for (char32_t c : text::decode_utf8(input)) {
        if (text::is_alphabetic(c)) {
            cleaned += text::fold_case(c);
        } else if (cleaned.back() != U' ') {
            cleaned.push_back(U' ');
        }
    }
    if (cleaned.back() != U' ') cleaned.push_back(U' ');

    TrigramCounts counts;
    for (std::size_t i = 0; i + 3 <= cleaned.size(); ++i) {
        ++counts[text::encode_utf8(std::u32string_view(cleaned).substr(i, 3))];
    }
    return counts;
}

}  // namespace locaudit
