#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "locaudit/task_model.hpp"

namespace locaudit {

enum class FilterCheck { language_id, answer_leak, placeholder_recall };

std::string_view to_string(FilterCheck c);
std::optional<FilterCheck> parse_filter_check(std::string_view s);

struct FilterFinding {
    FilterCheck check = FilterCheck::language_id;
    bool passed = true;
    IssueCategory category = IssueCategory::hallucination;
    std::string detail;
    std::optional<double> score;

    bool operator==(const FilterFinding&) const = default;
};

nlohmann::ordered_json to_json(const FilterFinding& f);
FilterFinding finding_from_json(const nlohmann::json& j);

// Answers shorter than this (normalized code points) are not leak-checked.
inline constexpr std::size_t kMinLeakLength = 4;

FilterFinding check_language(const TaskRecord& target);
FilterFinding detect_answer_leak(const TaskPair& pair);
FilterFinding check_placeholder_recall(const TaskPair& pair);

// Always three findings, in the order language_id, answer_leak,
// placeholder_recall. Filters report; routing is the audit store's job.
std::vector<FilterFinding> run_filters(const TaskPair& pair);

}  // namespace locaudit
