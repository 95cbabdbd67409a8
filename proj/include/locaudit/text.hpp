#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace locaudit::text {

// Invalid UTF-8 sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t c);

bool is_whitespace(char32_t c);
// Unicode Alphabetic property (letters plus combining vowel signs).
bool is_alphabetic(char32_t c);
// General category P* (Pc, Pd, Ps, Pe, Pi, Pf, Po).
bool is_punctuation(char32_t c);

// Full (non-Turkic) case folding of a single code point; may expand.
std::u32string fold_case(char32_t c);
std::u32string fold_case(std::u32string_view s);

std::string trim(std::string_view s);
// Trim and replace every run of Unicode whitespace with one ASCII space.
std::string collapse_whitespace(std::string_view s);
// Split on runs of Unicode whitespace; never yields empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

// Number of code points.
std::size_t length(std::string_view s);

}  // namespace locaudit::text
