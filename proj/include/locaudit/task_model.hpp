#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace locaudit {

enum class Variant { english, mt, audited };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view s);

// Closed set of audit issue categories. Flags, checkboxes and analytics all
// key into exactly one of these.
enum class IssueCategory {
    fluency,
    adequacy,
    hallucination,
    functional_alignment,
    cultural_alignment,
    difficulty_calibration,
};

inline constexpr std::array<IssueCategory, 6> kIssueCategories = {
    IssueCategory::fluency,
    IssueCategory::adequacy,
    IssueCategory::hallucination,
    IssueCategory::functional_alignment,
    IssueCategory::cultural_alignment,
    IssueCategory::difficulty_calibration,
};

std::string_view to_string(IssueCategory c);
std::optional<IssueCategory> parse_issue_category(std::string_view s);

struct TaskRecord {
    std::string task_id;
    std::string language;
    Variant variant = Variant::english;
    int level = 1;
    std::string query;
    std::string answer;
    std::string file_name;  // empty when the task has no attachment
    std::string source_task_id;

    bool operator==(const TaskRecord&) const = default;
};

struct TaskPair {
    TaskRecord source;
    TaskRecord target;

    bool operator==(const TaskPair&) const = default;
};

struct DatasetMetadata {
    std::string name;
    std::string created;
    std::string provenance;

    bool operator==(const DatasetMetadata&) const = default;
};

struct Dataset {
    std::vector<TaskRecord> records;
    DatasetMetadata metadata;

    bool operator==(const Dataset&) const = default;
};

// Primary subtag, lower-cased: "pt-BR" -> "pt".
std::string primary_language(std::string_view tag);
bool is_valid_language_tag(std::string_view tag);

// Throws ValidationError naming the violated invariant.
void validate_record(const TaskRecord& r);
void validate_pair(const TaskPair& p);

// Parses one dataset line. Accepts the compatibility field names "Question",
// "Final answer" and "Level". Throws ParseError (line 0).
TaskRecord parse_record(std::string_view line);
std::string serialize_record(const TaskRecord& r);

nlohmann::ordered_json record_to_json(const TaskRecord& r);
TaskRecord record_from_json(const nlohmann::json& j);

// Rejects the whole input on the first malformed line or duplicate
// (task_id, variant, language) triple. Blank lines are skipped.
Dataset parse_dataset(const std::vector<std::string>& lines);
std::vector<std::string> serialize_dataset(const Dataset& d);

Dataset read_dataset_file(const std::string& path);
void write_dataset_file(const std::string& path, const Dataset& d);

// One pair per translated record, in translated order.
std::vector<TaskPair> pair_variants(const Dataset& english, const Dataset& translated);

}  // namespace locaudit
