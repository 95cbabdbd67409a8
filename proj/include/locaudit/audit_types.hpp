#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "locaudit/filters.hpp"
#include "locaudit/judges.hpp"
#include "locaudit/task_model.hpp"

namespace locaudit {

enum class AuditState { ingested, checked, in_review, reviewed, meta_pending, approved, returned };

inline constexpr std::array<AuditState, 7> kAuditStates = {
    AuditState::ingested,     AuditState::checked,  AuditState::in_review, AuditState::reviewed,
    AuditState::meta_pending, AuditState::approved, AuditState::returned,
};

std::string_view to_string(AuditState s);
std::optional<AuditState> parse_audit_state(std::string_view s);

// ingested->checked->in_review->reviewed->meta_pending->{approved,returned};
// returned->in_review.
bool is_legal_transition(AuditState from, AuditState to);

// A translated task is identified by its language and its own task_id.
struct TaskKey {
    std::string language;
    std::string task_id;

    auto operator<=>(const TaskKey&) const = default;
    bool operator==(const TaskKey&) const = default;
};

std::string to_string(const TaskKey& k);

using IssueFlags = std::map<IssueCategory, bool>;

struct ReviewDecision {
    std::string task_id;
    std::string language;
    std::string reviewer_id;
    IssueFlags flags;  // all six categories, explicitly true or false
    std::string edited_query;
    std::string edited_answer;
    std::string note;
    std::string timestamp;

    bool any_flag() const;
    bool operator==(const ReviewDecision&) const = default;
};

enum class MetaRole { linguist, researcher };

std::string_view to_string(MetaRole r);
std::optional<MetaRole> parse_meta_role(std::string_view s);

struct MetaReview {
    std::string task_id;
    std::string language;
    std::string reviewer_id;
    MetaRole role = MetaRole::linguist;
    bool approve = false;
    std::string note;
    std::string timestamp;
    int round = 0;  // review round this meta-review belongs to; assigned by the store

    bool operator==(const MetaReview&) const = default;
};

nlohmann::ordered_json to_json(const ReviewDecision& d);
// Requires every IssueCategory key with a boolean value.
ReviewDecision decision_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const MetaReview& m);
MetaReview meta_from_json(const nlohmann::json& j);

enum class EventKind { ingest, findings_attached, task_claimed, review_submitted, meta_submitted, state_changed };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct AuditEvent {
    long long sequence = 0;
    EventKind kind = EventKind::ingest;
    std::string timestamp;
    nlohmann::ordered_json payload;

    bool operator==(const AuditEvent&) const = default;
};

std::string serialize_event(const AuditEvent& e);
AuditEvent parse_event(std::string_view line);

enum class Severity { info, medium, high };
std::string_view to_string(Severity s);

// Filter findings and judge verdicts merged for display next to a task.
struct CheckItem {
    std::string source;  // "filter" or "judge"
    std::string name;    // check or axis name
    bool passed = true;
    IssueCategory category = IssueCategory::fluency;
    Severity severity = Severity::info;
    std::string detail;
};

struct CheckReport {
    TaskKey key;
    std::vector<CheckItem> items;
    int priority = 0;
};

// Failed filters are objective defects (high); failed judges are medium.
CheckReport make_check_report(const TaskKey& key, const std::vector<FilterFinding>& findings,
                              const std::vector<JudgeVerdict>& verdicts);
nlohmann::ordered_json to_json(const CheckReport& r);

}  // namespace locaudit
