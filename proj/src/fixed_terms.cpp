#include "locaudit/fixed_terms.hpp"

#include <algorithm>
#include <regex>

#include <unicode/uchar.h>

#include "locaudit/task_model.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

namespace {

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }

// Languages writing "1.234,5" (comma decimal, dot grouping).
bool uses_decimal_comma(std::string_view language) {
    const auto primary = primary_language(language);
    return primary == "de" || primary == "pt";
}

const std::regex& url_re() {
    static const std::regex re(R"((?:[A-Za-z][A-Za-z0-9+.\-]*://|\bwww\.)[A-Za-z0-9\-._~:/?#\[\]@!$&'()*+,;=%]+)");
    return re;
}

const std::regex& email_re() {
    static const std::regex re(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})");
    return re;
}

const std::regex& file_re() {
    static const std::regex re(
        R"([A-Za-z0-9_\-]+(\.[A-Za-z0-9_\-]+)*\.(pdf|xlsx|xls|csv|docx|doc|txt|png|jpg|jpeg|gif|mp3|wav|mp4|mov|py|json|jsonld|xml|zip|pptx|pdb|md|html)(?![A-Za-z0-9]))",
        std::regex::icase);
    return re;
}

std::string trim_url(std::string url) {
    while (!url.empty()) {
        const char last = url.back();
        if (last == ')') {
            const auto open = std::count(url.begin(), url.end(), '(');
            const auto close = std::count(url.begin(), url.end(), ')');
            if (close <= open) break;
        } else if (std::string_view(".,;:!?'\"]").find(last) == std::string_view::npos) {
            break;
        }
        url.pop_back();
    }
    return url;
}

// Collect every match of re into out (after post) and blank it in text.
template <typename Post>
void take_matches(std::string& text, const std::regex& re, std::set<std::string>& out, Post post) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        std::string m = post(it->str());
        if (m.empty()) continue;
        out.insert(m);
        spans.emplace_back(static_cast<std::size_t>(it->position()), m.size());
    }
    for (auto [pos, len] : spans) std::fill_n(text.begin() + static_cast<std::ptrdiff_t>(pos), len, ' ');
}

std::vector<std::string> split_on_separators(std::string_view s, std::string& seps) {
    std::vector<std::string> parts(1);
    for (char c : s) {
        if (c == '.' || c == ',') {
            seps.push_back(c);
            parts.emplace_back();
        } else {
            parts.back().push_back(c);
        }
    }
    return parts;
}

bool is_grouping_run(const std::vector<std::string>& groups, std::size_t count) {
    if (groups.empty() || groups[0].empty() || groups[0].size() > 3) return false;
    for (std::size_t i = 1; i < count; ++i) {
        if (groups[i].size() != 3) return false;
    }
    return true;
}

std::string join(const std::vector<std::string>& parts, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) out += parts[i];
    return out;
}

void add_number(FixedTermSet& set, NumberTerm term) {
    auto it = std::lower_bound(set.numbers.begin(), set.numbers.end(), term);
    if (it != set.numbers.end() && it->value == term.value) return;
    set.numbers.insert(it, std::move(term));
}

void scan_numbers(const std::string& text, std::string_view language, FixedTermSet& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_ascii_digit(text[i])) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < text.size()) {
            if (is_ascii_digit(text[i])) {
                ++i;
            } else if ((text[i] == '.' || text[i] == ',') && i + 1 < text.size() && is_ascii_digit(text[i + 1])) {
                ++i;
            } else {
                break;
            }
        }
        // Digits glued to a preceding letter belong to an identifier (Rd5, v2).
        if (start > 0 && (is_ascii_alpha(text[start - 1]) || text[start - 1] == '_')) continue;

        const std::string surface = text.substr(start, i - start);
        if (auto term = parse_number(surface, language)) {
            add_number(out, std::move(*term));
        } else {
            std::string seps;
            for (const auto& part : split_on_separators(surface, seps)) {
                add_number(out, NumberTerm{part, canonical_decimal(part, ""), std::nullopt});
            }
        }
    }
}

void scan_code_tokens(const std::string& masked, FixedTermSet& out) {
    auto is_word = [](char32_t c) { return text::is_alphabetic(c) || c == U'_' || u_isdigit(static_cast<UChar32>(c)); };
    const auto cps = text::decode_utf8(masked);
    std::size_t i = 0;
    while (i < cps.size()) {
        if (!is_word(cps[i])) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < cps.size() && is_word(cps[i])) ++i;
        const std::u32string_view run(cps.data() + start, i - start);
        if (run.size() < 2 || !std::all_of(run.begin(), run.end(), [](char32_t c) { return c < 0x80; })) continue;
        const std::string token = text::encode_utf8(run);
        if (!is_ascii_alpha(token[0])) continue;
        const bool has_digit = std::any_of(token.begin(), token.end(), is_ascii_digit);
        const bool has_lower = std::any_of(token.begin(), token.end(), [](char c) { return c >= 'a' && c <= 'z'; });
        const bool all_caps = !has_lower && std::any_of(token.begin(), token.end(), is_ascii_upper);
        if (has_digit || all_caps) out.code_tokens.insert(token);
    }
}

}  // namespace

bool NumberTerm::matches(const NumberTerm& other) const {
    auto has = [&](const std::string& v) { return v == other.value || (other.alternate && v == *other.alternate); };
    return has(value) || (alternate && has(*alternate));
}

std::string canonical_decimal(std::string_view digits_int, std::string_view digits_frac) {
    std::size_t lead = 0;
    while (lead + 1 < digits_int.size() && digits_int[lead] == '0') ++lead;
    std::string out(digits_int.substr(lead));
    if (out.empty()) out = "0";
    std::size_t frac_len = digits_frac.size();
    while (frac_len > 0 && digits_frac[frac_len - 1] == '0') --frac_len;
    if (frac_len > 0) {
        out += '.';
        out += digits_frac.substr(0, frac_len);
    }
    return out;
}

std::string transliterate_digits(std::string_view input) {
    std::string out;
    out.reserve(input.size());
    for (char32_t c : text::decode_utf8(input)) {
        if (c >= 0x0660 && c <= 0x0669) {
            out.push_back(static_cast<char>('0' + (c - 0x0660)));
        } else if (c >= 0x06F0 && c <= 0x06F9) {
            out.push_back(static_cast<char>('0' + (c - 0x06F0)));
        } else if (c >= 0x0966 && c <= 0x096F) {
            out.push_back(static_cast<char>('0' + (c - 0x0966)));
        } else if (c == 0x066B) {
            out.push_back('.');
        } else if (c == 0x066C) {
            out.push_back(',');
        } else {
            text::append_utf8(out, c);
        }
    }
    return out;
}

std::optional<NumberTerm> parse_number(std::string_view surface, std::string_view language) {
    std::string seps;
    const auto parts = split_on_separators(surface, seps);
    for (const auto& p : parts) {
        if (p.empty() || !std::all_of(p.begin(), p.end(), is_ascii_digit)) return std::nullopt;
    }
    NumberTerm term{std::string(surface), {}, std::nullopt};
    if (seps.empty()) {
        term.value = canonical_decimal(parts[0], "");
        return term;
    }

    const char last = seps.back();
    const bool mixed = seps.find_first_not_of(last) != std::string::npos;
    if (mixed) {
        // Every separator but the last is grouping; the last is the decimal point.
        if (std::count(seps.begin(), seps.end(), last) != 1) return std::nullopt;
        if (!is_grouping_run(parts, parts.size() - 1)) return std::nullopt;
        term.value = canonical_decimal(join(parts, parts.size() - 1), parts.back());
        return term;
    }
    if (seps.size() > 1) {
        if (!is_grouping_run(parts, parts.size())) return std::nullopt;
        term.value = canonical_decimal(join(parts, parts.size()), "");
        return term;
    }

    const auto decimal = canonical_decimal(parts[0], parts[1]);
    const bool ambiguous = parts[1].size() == 3 && parts[0].size() <= 3 && parts[0] != "0";
    if (!ambiguous) {
        term.value = decimal;
        return term;
    }
    const auto grouped = canonical_decimal(parts[0] + parts[1], "");
    const bool comma_is_decimal = uses_decimal_comma(language);
    const bool read_as_decimal = (last == ',') == comma_is_decimal;
    term.value = read_as_decimal ? decimal : grouped;
    term.alternate = read_as_decimal ? grouped : decimal;
    return term;
}

FixedTermSet extract_fixed_terms(std::string_view input, std::string_view language) {
    FixedTermSet out;
    std::string masked(input);
    take_matches(masked, url_re(), out.urls, trim_url);
    take_matches(masked, email_re(), out.emails, [](std::string s) { return s; });
    take_matches(masked, file_re(), out.file_names, [](std::string s) { return s; });
    scan_numbers(transliterate_digits(masked), language, out);
    scan_code_tokens(masked, out);
    return out;
}

}  // namespace locaudit
