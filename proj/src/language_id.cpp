#include "locaudit/language_id.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "locaudit/error.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

namespace {

struct ScriptBlock {
    const char* language;
    std::initializer_list<std::pair<char32_t, char32_t>> ranges;
};

const ScriptBlock kScripts[] = {
    {"ar", {{0x0600, 0x06FF}, {0x0750, 0x077F}, {0x08A0, 0x08FF}, {0xFB50, 0xFDFF}, {0xFE70, 0xFEFF}}},
    {"hi", {{0x0900, 0x097F}, {0xA8E0, 0xA8FF}}},
    {"ko", {{0xAC00, 0xD7AF}, {0x1100, 0x11FF}, {0x3130, 0x318F}, {0xA960, 0xA97F}, {0xD7B0, 0xD7FF}}},
};

bool in_block(const ScriptBlock& block, char32_t c) {
    for (auto [lo, hi] : block.ranges) {
        if (c >= lo && c <= hi) return true;
    }
    return false;
}

// Sublinear term frequency, so a few very common trigrams cannot dominate
// the comparison of short texts.
double term_weight(std::size_t count) { return count == 0 ? 0.0 : 1.0 + std::log(static_cast<double>(count)); }

struct CompiledProfile {
    std::string language;
    std::unordered_map<std::string, double> weights;
    double norm = 0.0;
};

const std::vector<CompiledProfile>& compiled_profiles() {
    static const std::vector<CompiledProfile> profiles = [] {
        std::vector<CompiledProfile> out;
        for (const auto& p : builtin_profiles()) {
            CompiledProfile c;
            c.language = p.language;
            double sq = 0.0;
            for (const auto& e : p.trigrams) {
                const double w = term_weight(e.count);
                c.weights.emplace(e.trigram, w);
                sq += w * w;
            }
            c.norm = std::sqrt(sq);
            out.push_back(std::move(c));
        }
        return out;
    }();
    return profiles;
}

bool ascii_alnum(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// URLs, emails and file names carry no language signal.
bool is_address_like(std::string_view token) {
    if (token.find("://") != std::string_view::npos || token.find('@') != std::string_view::npos) return true;
    if (token.rfind("www.", 0) == 0) return true;
    for (std::size_t i = 1; i + 1 < token.size(); ++i) {
        if ((token[i] == '.' || token[i] == '_') && ascii_alnum(token[i - 1]) && ascii_alnum(token[i + 1])) return true;
    }
    return false;
}

std::string linguistic_text(std::string_view input) {
    std::string out;
    for (const auto& token : text::split_whitespace(input)) {
        if (is_address_like(token)) continue;
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

}  // namespace

std::string_view to_string(DetectionMethod m) {
    return m == DetectionMethod::script_range ? "script_range" : "ngram_profile";
}

std::vector<std::pair<std::string, double>> profile_similarities(std::string_view input) {
    const auto counts = extract_trigrams(input);
    double text_sq = 0.0;
    for (const auto& [_, n] : counts) text_sq += term_weight(n) * term_weight(n);
    const double text_norm = std::sqrt(text_sq);

    std::vector<std::pair<std::string, double>> out;
    for (const auto& profile : compiled_profiles()) {
        double dot = 0.0;
        for (const auto& [tri, n] : counts) {
            if (auto it = profile.weights.find(tri); it != profile.weights.end()) dot += term_weight(n) * it->second;
        }
        const double denom = text_norm * profile.norm;
        out.emplace_back(profile.language, denom > 0.0 ? dot / denom : 0.0);
    }
    return out;
}

LanguageGuess identify_language(std::string_view input) {
    if (text::trim(input).empty()) throw ValidationError("cannot identify language of empty text");

    const auto filtered = linguistic_text(input);
    if (!filtered.empty()) input = filtered;
    const auto cps = text::decode_utf8(input);
    std::size_t letters = 0;
    std::size_t per_script[std::size(kScripts)] = {};
    for (char32_t c : cps) {
        if (!text::is_alphabetic(c)) continue;
        ++letters;
        for (std::size_t s = 0; s < std::size(kScripts); ++s) {
            if (in_block(kScripts[s], c)) ++per_script[s];
        }
    }
    if (letters > 0) {
        for (std::size_t s = 0; s < std::size(kScripts); ++s) {
            if (static_cast<double>(per_script[s]) >= kScriptShare * static_cast<double>(letters)) {
                return {kScripts[s].language, 1.0, DetectionMethod::script_range};
            }
        }
    }

    LanguageGuess best{"und", 0.0, DetectionMethod::ngram_profile};
    for (const auto& [lang, sim] : profile_similarities(input)) {
        if (sim > best.confidence) {
            best.language = lang;
            best.confidence = sim;
        }
    }
    if (best.confidence < kMinProfileSimilarity) best.language = "und";
    best.confidence = std::clamp(best.confidence, 0.0, 1.0);
    return best;
}

}  // namespace locaudit
