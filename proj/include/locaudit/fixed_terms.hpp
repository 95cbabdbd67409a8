#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace locaudit {

// A number found in text. value is the canonical decimal string under the
// text's language convention; alternate holds the other reading when the
// surface form is ambiguous ("1.234" is 1234 in de/pt and 1.234 in en).
struct NumberTerm {
    std::string surface;
    std::string value;
    std::optional<std::string> alternate;

    bool matches(const NumberTerm& other) const;
    bool operator==(const NumberTerm&) const = default;
    auto operator<=>(const NumberTerm& o) const { return value <=> o.value; }
};

struct FixedTermSet {
    std::set<std::string> urls;
    std::set<std::string> emails;
    std::vector<NumberTerm> numbers;  // sorted by value, unique by value
    std::set<std::string> code_tokens;
    std::set<std::string> file_names;

    std::size_t size() const {
        return urls.size() + emails.size() + numbers.size() + code_tokens.size() + file_names.size();
    }
    bool empty() const { return size() == 0; }
};

// Canonical decimal string: no grouping, '.' as decimal point, no leading
// zeros in the integer part, no trailing zeros in the fraction.
// digits_int / digits_frac must be ASCII digits.
std::string canonical_decimal(std::string_view digits_int, std::string_view digits_frac);

// Map Eastern-Arabic, Extended Arabic-Indic and Devanagari digits (and the
// Arabic decimal/thousands separators) to ASCII.
std::string transliterate_digits(std::string_view text);

// Parse one numeric surface form ("1,234.56", "1.234,56", "20,1") using the
// given language's convention for the ambiguous single-separator case.
// Returns nullopt for forms that are not a single number (e.g. "1.2.3").
std::optional<NumberTerm> parse_number(std::string_view surface, std::string_view language);

// language only decides how ambiguous grouping is read; pass "" for en rules.
FixedTermSet extract_fixed_terms(std::string_view text, std::string_view language = "");

}  // namespace locaudit
