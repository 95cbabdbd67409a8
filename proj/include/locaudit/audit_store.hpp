#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "locaudit/audit_types.hpp"

namespace locaudit {

inline constexpr const char* kEventLogName = "audit.events.jsonl";

struct TaskEntry {
    TaskPair pair;
    AuditState state = AuditState::ingested;
    std::vector<FilterFinding> findings;
    std::vector<JudgeVerdict> verdicts;
    bool findings_attached = false;
    bool verdicts_attached = false;
    int priority = 0;
    std::optional<std::string> claimed_by;
    std::vector<ReviewDecision> decisions;  // full history, oldest first
    std::vector<MetaReview> meta_reviews;   // full history, tagged with round

    int round() const { return static_cast<int>(decisions.size()); }
    const ReviewDecision* current_decision() const { return decisions.empty() ? nullptr : &decisions.back(); }
    std::vector<MetaReview> current_meta_reviews() const;

    bool operator==(const TaskEntry&) const = default;
};

// Materialized view of the event log.
struct StoreState {
    std::map<std::string, TaskRecord> english;  // by task_id
    std::map<TaskKey, TaskEntry> tasks;
    long long last_sequence = 0;
    std::string last_timestamp;

    bool operator==(const StoreState&) const = default;
};

// Applies one event. Throws StateError if the event is not valid against the
// state; replay turns that into CorruptLogError.
void apply_event(StoreState& state, const AuditEvent& event);

// Rebuilds state from a log. Throws CorruptLogError on a sequence gap
// (naming the missing number) or an illegal transition.
StoreState replay(const std::vector<AuditEvent>& events);

std::vector<AuditEvent> read_event_log(const std::filesystem::path& path);

struct ClaimedTask {
    TaskRecord task;
    TaskRecord source;
    CheckReport report;
    std::vector<ReviewDecision> prior_decisions;
    std::vector<MetaReview> prior_meta_reviews;
};

struct TaskSummary {
    TaskKey key;
    AuditState state = AuditState::ingested;
    int priority = 0;
    int failed_filters = 0;
    int failed_judges = 0;
    std::optional<std::string> claimed_by;
};

struct LanguageStats {
    std::map<AuditState, int> states;
    std::map<IssueCategory, int> flags;  // over current decisions
    int tasks = 0;
};

using Clock = std::function<std::string()>;

// UTC ISO-8601 with seconds.
std::string utc_now();

// Single-writer audit store over an append-only event log. Mutations are
// serialized; reads take a shared lock and return copies.
class AuditStore {
public:
    struct Options {
        std::optional<std::filesystem::path> log_path;  // none: in-memory only
        Clock clock = utc_now;
    };

    AuditStore();
    explicit AuditStore(Options options);

    // Store backed by <project_dir>/audit.events.jsonl, replaying it if present.
    static AuditStore open(const std::filesystem::path& project_dir, Clock clock = utc_now);

    AuditStore(const AuditStore&) = delete;
    AuditStore& operator=(const AuditStore&) = delete;
    AuditStore(AuditStore&&) noexcept;

    // All-or-nothing: rejects the batch if any target triple is already present.
    void ingest(const std::vector<TaskPair>& pairs);

    AuditState attach_filter_findings(const TaskKey& key, std::vector<FilterFinding> findings);
    AuditState attach_verdicts(const TaskKey& key, std::vector<JudgeVerdict> verdicts);
    // Both stages at once: ingested -> checked -> in_review.
    AuditState attach_findings(const TaskKey& key, std::vector<FilterFinding> findings,
                               std::vector<JudgeVerdict> verdicts);

    // Highest priority unclaimed task, ties by task_id. A reviewer who already
    // holds a claim in the language gets that task back. Throws NotFoundError.
    ClaimedTask next_task(const std::string& reviewer_id, const std::string& language);

    AuditState submit_review(ReviewDecision decision);
    AuditState submit_meta_review(MetaReview review);

    // Approved tasks only, sorted by task_id; metadata notes the excluded count.
    Dataset export_audited(const std::string& language) const;

    StoreState snapshot() const;
    std::vector<AuditEvent> events() const;
    std::optional<TaskEntry> find(const TaskKey& key) const;
    // Resolves a bare task_id; throws NotFoundError, or StateError when the id
    // exists in several languages.
    TaskKey resolve(const std::string& task_id, const std::string& language = "") const;
    std::vector<TaskSummary> list(const std::string& language = "", std::optional<AuditState> state = {}) const;
    std::map<std::string, LanguageStats> stats() const;

private:
    void append(std::vector<AuditEvent> events);
    AuditEvent make_event(EventKind kind, nlohmann::ordered_json payload, long long sequence) const;
    TaskEntry& entry_or_throw(const TaskKey& key);

    Options options_;
    StoreState state_;
    std::vector<AuditEvent> log_;
    std::ofstream log_file_;
    mutable std::shared_mutex mu_;
};

}  // namespace locaudit
