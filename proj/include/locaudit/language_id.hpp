#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace locaudit {

enum class DetectionMethod { script_range, ngram_profile };

std::string_view to_string(DetectionMethod m);

struct LanguageGuess {
    std::string language;  // one of en, ar, de, hi, ko, pt, or "und"
    double confidence = 0.0;
    DetectionMethod method = DetectionMethod::ngram_profile;
};

using TrigramCounts = std::map<std::string, std::uint32_t>;

// Character trigrams over case-folded text in which every non-alphabetic run
// collapses to one space, padded with a space at both ends.
TrigramCounts extract_trigrams(std::string_view text);

struct TrigramEntry {
    const char* trigram;
    std::uint32_t count;
};

struct LanguageProfile {
    const char* language;
    std::span<const TrigramEntry> trigrams;
};

// Profiles compiled into the binary from the bundled seed corpora.
std::span<const LanguageProfile> builtin_profiles();

// Fraction of a letter-heavy text that must fall in one script block
// (Arabic, Devanagari, Hangul) for the script fast path to fire.
inline constexpr double kScriptShare = 0.8;
// Below this best cosine similarity the guess is "und".
inline constexpr double kMinProfileSimilarity = 0.10;

// URL-, email- and file-name-like tokens are dropped before classifying.
// Throws ValidationError on text that is empty after trimming.
LanguageGuess identify_language(std::string_view text);

// Cosine similarity of the text's trigram vector (counts weighted 1+ln n) against every builtin
// profile, in builtin order. Exposed for diagnostics and tests.
std::vector<std::pair<std::string, double>> profile_similarities(std::string_view text);

}  // namespace locaudit
