#include "locaudit/filters.hpp"

#include <sstream>

#include <unicode/uchar.h>

#include "locaudit/error.hpp"
#include "locaudit/fixed_terms.hpp"
#include "locaudit/grading.hpp"
#include "locaudit/language_id.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

namespace {

IssueCategory category_for(FilterCheck c) {
    return c == FilterCheck::placeholder_recall ? IssueCategory::adequacy : IssueCategory::hallucination;
}

FilterFinding make(FilterCheck check, bool passed, std::string detail, std::optional<double> score = std::nullopt) {
    return FilterFinding{check, passed, category_for(check), std::move(detail), score};
}

bool word_char(char32_t c) { return text::is_alphabetic(c) || u_isdigit(static_cast<UChar32>(c)); }

// True when needle occurs in haystack (both normalized) at a position whose
// original span is not glued to a letter or digit on either side.
bool leaks_into(const NormalizedText& haystack, const std::u32string& original, const std::u32string& needle) {
    if (needle.empty()) return false;
    std::size_t pos = haystack.text.find(needle);
    while (pos != std::u32string::npos) {
        const std::size_t first = haystack.origin[pos];
        const std::size_t last = haystack.origin[pos + needle.size() - 1];
        const bool glued_before = first > 0 && word_char(original[first - 1]);
        const bool glued_after = last + 1 < original.size() && word_char(original[last + 1]);
        if (!glued_before && !glued_after) return true;
        pos = haystack.text.find(needle, pos + 1);
    }
    return false;
}

std::string describe_number(const NumberTerm& n) { return n.surface; }

}  // namespace

std::string_view to_string(FilterCheck c) {
    switch (c) {
        case FilterCheck::language_id: return "language_id";
        case FilterCheck::answer_leak: return "answer_leak";
        case FilterCheck::placeholder_recall: return "placeholder_recall";
    }
    return "language_id";
}

std::optional<FilterCheck> parse_filter_check(std::string_view s) {
    for (auto c : {FilterCheck::language_id, FilterCheck::answer_leak, FilterCheck::placeholder_recall}) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

nlohmann::ordered_json to_json(const FilterFinding& f) {
    nlohmann::ordered_json j;
    j["check"] = to_string(f.check);
    j["passed"] = f.passed;
    j["category"] = to_string(f.category);
    j["detail"] = f.detail;
    j["score"] = f.score ? nlohmann::ordered_json(*f.score) : nlohmann::ordered_json(nullptr);
    return j;
}

FilterFinding finding_from_json(const nlohmann::json& j) {
    FilterFinding f;
    auto check = parse_filter_check(j.at("check").get<std::string>());
    auto category = parse_issue_category(j.at("category").get<std::string>());
    if (!check || !category) throw ValidationError("bad filter finding: " + j.dump());
    f.check = *check;
    f.category = *category;
    f.passed = j.at("passed").get<bool>();
    f.detail = j.value("detail", "");
    if (j.contains("score") && !j["score"].is_null()) f.score = j["score"].get<double>();
    return f;
}

FilterFinding check_language(const TaskRecord& target) {
    if (target.variant == Variant::english) throw ValidationError("language check applies to translated variants");
    const auto guess = identify_language(target.query);
    const auto expected = primary_language(target.language);
    const bool passed = guess.language == expected;
    std::string detail = passed ? "detected " + guess.language + " (" + std::string(to_string(guess.method)) + ")"
                                : "expected " + expected + ", detected " + guess.language;
    return make(FilterCheck::language_id, passed, std::move(detail), guess.confidence);
}

FilterFinding detect_answer_leak(const TaskPair& pair) {
    validate_pair(pair);
    const auto query = text::decode_utf8(pair.target.query);
    const auto haystack = normalize_with_origins(query);

    struct Candidate {
        const char* label;
        const std::string* answer;
    };
    const Candidate candidates[] = {{"target answer", &pair.target.answer}, {"english answer", &pair.source.answer}};

    std::vector<std::string> leaked;
    bool any_checked = false;
    for (const auto& c : candidates) {
        const auto needle = normalize_with_origins(text::decode_utf8(*c.answer)).text;
        if (needle.size() < kMinLeakLength) continue;
        any_checked = true;
        if (leaks_into(haystack, query, needle)) leaked.push_back(std::string(c.label) + " \"" + *c.answer + "\"");
    }
    if (!leaked.empty()) {
        std::string detail = "answer leaked in query: ";
        for (std::size_t i = 0; i < leaked.size(); ++i) detail += (i ? "; " : "") + leaked[i];
        return make(FilterCheck::answer_leak, false, std::move(detail));
    }
    return make(FilterCheck::answer_leak, true,
                any_checked ? "no leak found" : "answer too short for reliable leak detection");
}

FilterFinding check_placeholder_recall(const TaskPair& pair) {
    validate_pair(pair);
    const auto source = extract_fixed_terms(pair.source.query, pair.source.language);
    const auto target = extract_fixed_terms(pair.target.query, pair.target.language);
    if (source.empty()) return make(FilterCheck::placeholder_recall, true, "no fixed terms in source", 1.0);

    std::vector<std::string> missing;
    auto check_set = [&](const std::set<std::string>& s, const std::set<std::string>& t, const char* kind) {
        for (const auto& term : s) {
            if (!t.count(term)) missing.push_back(std::string(kind) + " " + term);
        }
    };
    check_set(source.urls, target.urls, "url");
    check_set(source.emails, target.emails, "email");
    for (const auto& n : source.numbers) {
        const bool found = std::any_of(target.numbers.begin(), target.numbers.end(),
                                       [&](const NumberTerm& t) { return n.matches(t); });
        if (!found) missing.push_back("number " + describe_number(n));
    }
    check_set(source.code_tokens, target.code_tokens, "code");
    check_set(source.file_names, target.file_names, "file");

    const double total = static_cast<double>(source.size());
    const double recall = (total - static_cast<double>(missing.size())) / total;
    if (missing.empty()) return make(FilterCheck::placeholder_recall, true, "all fixed terms preserved", recall);

    std::ostringstream detail;
    detail << "missing " << missing.size() << " of " << source.size() << " fixed terms: ";
    for (std::size_t i = 0; i < missing.size(); ++i) detail << (i ? ", " : "") << missing[i];
    return make(FilterCheck::placeholder_recall, false, detail.str(), recall);
}

std::vector<FilterFinding> run_filters(const TaskPair& pair) {
    validate_pair(pair);
    std::vector<FilterFinding> out;
    auto attributed = [](FilterCheck check, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(std::string(to_string(check)) + ": " + e.what());
        }
    };
    out.push_back(attributed(FilterCheck::language_id, [&] { return check_language(pair.target); }));
    out.push_back(attributed(FilterCheck::answer_leak, [&] { return detect_answer_leak(pair); }));
    out.push_back(attributed(FilterCheck::placeholder_recall, [&] { return check_placeholder_recall(pair); }));
    return out;
}

}  // namespace locaudit
