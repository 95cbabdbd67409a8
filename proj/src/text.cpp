#include "locaudit/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace locaudit::text {

std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const int32_t n = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < n) {
        UChar32 c;
        U8_NEXT(bytes, i, n, c);
        out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
    }
    return out;
}

void append_utf8(std::string& out, char32_t c) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool error = false;
    if (c > 0x10FFFF || (c >= 0xD800 && c <= 0xDFFF)) c = 0xFFFD;
    U8_APPEND(buf, len, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
}

std::string encode_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t c : s) append_utf8(out, c);
    return out;
}

bool is_whitespace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_alphabetic(char32_t c) {
    return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_ALPHABETIC);
}

bool is_punctuation(char32_t c) {
    switch (u_charType(static_cast<UChar32>(c))) {
        case U_CONNECTOR_PUNCTUATION:
        case U_DASH_PUNCTUATION:
        case U_START_PUNCTUATION:
        case U_END_PUNCTUATION:
        case U_INITIAL_PUNCTUATION:
        case U_FINAL_PUNCTUATION:
        case U_OTHER_PUNCTUATION:
            return true;
        default:
            return false;
    }
}

std::u32string fold_case(char32_t c) {
    // Fast path: simple folding covers everything except the few code points
    // with multi-character full foldings (e.g. U+00DF -> "ss").
    if (c < 0x80) {
        return std::u32string(1, (c >= U'A' && c <= U'Z') ? c + 32 : c);
    }
    icu::UnicodeString u(static_cast<UChar32>(c));
    u.foldCase(U_FOLD_CASE_DEFAULT);
    std::u32string out;
    for (int32_t i = 0; i < u.length();) {
        UChar32 cp = u.char32At(i);
        out.push_back(static_cast<char32_t>(cp));
        i += U16_LENGTH(cp);
    }
    return out;
}

std::u32string fold_case(std::u32string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (char32_t c : s) out += fold_case(c);
    return out;
}

std::string trim(std::string_view s) {
    auto cps = decode_utf8(s);
    std::size_t b = 0, e = cps.size();
    while (b < e && is_whitespace(cps[b])) ++b;
    while (e > b && is_whitespace(cps[e - 1])) --e;
    return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char32_t c : decode_utf8(s)) {
        if (is_whitespace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        append_utf8(out, c);
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char32_t c : decode_utf8(s)) {
        if (is_whitespace(c)) {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            append_utf8(cur, c);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::size_t length(std::string_view s) { return decode_utf8(s).size(); }

}  // namespace locaudit::text
