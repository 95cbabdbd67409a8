#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "locaudit/audit_types.hpp"
#include "locaudit/eval_types.hpp"
#include "locaudit/task_model.hpp"

namespace locaudit {

// Levenshtein distance with unit insert/delete/substitute costs.
template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

// Over Unicode code points.
std::size_t char_edit_distance(std::string_view a, std::string_view b);
// Over whitespace-delimited tokens.
std::size_t token_edit_distance(std::string_view a, std::string_view b);

// One decimal, half away from zero.
double round1(double value);

struct EditRateReport {
    std::string language;
    double task_rate = 0.0;  // percent of tasks whose text changed
    double word_rate = 0.0;  // macro-averaged normalized token distance, percent
    double char_rate = 0.0;  // macro-averaged normalized code point distance, percent
    std::size_t n_tasks = 0;
};

// Reports per language (sorted by tag), rates rounded to one decimal. Each
// task's text is query + "\n" + answer with whitespace collapsed; distances
// are normalized by the longer side. Throws PairingError on unpaired tasks.
std::vector<EditRateReport> edit_rates(const Dataset& mt, const Dataset& audited);

// Percent of decisions flagging each category, every category present.
// Throws ValidationError on empty input.
std::map<IssueCategory, double> flag_rates(const std::vector<ReviewDecision>& decisions);

struct CategoryFlips {
    double flag_rate = 0.0;
    std::optional<double> flip_rate;  // absent when nothing was flagged
    std::size_t n_flagged = 0;
    std::size_t n_flipped = 0;
};

struct FlipReport {
    std::map<IssueCategory, CategoryFlips> categories;
    std::size_t n_tasks = 0;
    std::string model_id;
};

// A task counts under every category it was flagged with. Outcomes are keyed
// by (language, task_id). Throws NotFoundError naming a flagged task that
// lacks an outcome in either variant.
FlipReport flip_rates(const std::vector<ReviewDecision>& decisions, const std::vector<EvalOutcome>& mt_outcomes,
                      const std::vector<EvalOutcome>& audited_outcomes);

inline constexpr std::string_view kEditRateFootnote =
    "Word/Char: Levenshtein distance over whitespace tokens / code points of query+answer, divided by the "
    "longer side and macro-averaged over tasks. This normalization is a reconstruction; other denominators "
    "give different numbers.";

std::string render_edit_rates(const std::vector<EditRateReport>& reports);
nlohmann::ordered_json to_json(const EditRateReport& r);
std::string render_flag_rates(const std::map<IssueCategory, double>& rates, std::size_t n_decisions);
std::string render_flip_report(const FlipReport& report);
nlohmann::ordered_json to_json(const FlipReport& r);

}  // namespace locaudit
