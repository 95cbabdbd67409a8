#include "locaudit/audit_types.hpp"

#include <algorithm>

#include "locaudit/error.hpp"

namespace locaudit {

std::string_view to_string(AuditState s) {
    switch (s) {
        case AuditState::ingested: return "ingested";
        case AuditState::checked: return "checked";
        case AuditState::in_review: return "in_review";
        case AuditState::reviewed: return "reviewed";
        case AuditState::meta_pending: return "meta_pending";
        case AuditState::approved: return "approved";
        case AuditState::returned: return "returned";
    }
    return "ingested";
}

std::optional<AuditState> parse_audit_state(std::string_view s) {
    for (auto st : kAuditStates) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

bool is_legal_transition(AuditState from, AuditState to) {
    using S = AuditState;
    switch (from) {
        case S::ingested: return to == S::checked;
        case S::checked: return to == S::in_review;
        case S::in_review: return to == S::reviewed;
        case S::reviewed: return to == S::meta_pending;
        case S::meta_pending: return to == S::approved || to == S::returned;
        case S::returned: return to == S::in_review;
        case S::approved: return false;
    }
    return false;
}

std::string to_string(const TaskKey& k) { return k.language + "/" + k.task_id; }

bool ReviewDecision::any_flag() const {
    return std::any_of(flags.begin(), flags.end(), [](const auto& kv) { return kv.second; });
}

std::string_view to_string(MetaRole r) { return r == MetaRole::linguist ? "linguist" : "researcher"; }

std::optional<MetaRole> parse_meta_role(std::string_view s) {
    if (s == "linguist") return MetaRole::linguist;
    if (s == "researcher") return MetaRole::researcher;
    return std::nullopt;
}

namespace {

std::string required_string(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_string()) {
        throw ValidationError(std::string("missing or non-string field \"") + field + "\"");
    }
    return j[field].get<std::string>();
}

}  // namespace

nlohmann::ordered_json to_json(const ReviewDecision& d) {
    nlohmann::ordered_json j;
    j["task_id"] = d.task_id;
    j["language"] = d.language;
    j["reviewer_id"] = d.reviewer_id;
    nlohmann::ordered_json flags = nlohmann::ordered_json::object();
    for (auto c : kIssueCategories) {
        if (auto it = d.flags.find(c); it != d.flags.end()) flags[std::string(to_string(c))] = it->second;
    }
    j["flags"] = std::move(flags);
    j["edited_query"] = d.edited_query;
    j["edited_answer"] = d.edited_answer;
    j["note"] = d.note;
    j["timestamp"] = d.timestamp;
    return j;
}

ReviewDecision decision_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("review decision must be an object");
    ReviewDecision d;
    d.task_id = required_string(j, "task_id");
    d.language = j.value("language", "");
    d.reviewer_id = required_string(j, "reviewer_id");
    if (!j.contains("flags") || !j["flags"].is_object()) throw ValidationError("missing \"flags\" object");
    for (auto it = j["flags"].begin(); it != j["flags"].end(); ++it) {
        auto c = parse_issue_category(it.key());
        if (!c) throw ValidationError("unknown issue category \"" + it.key() + "\"");
        if (!it.value().is_boolean()) throw ValidationError("flag \"" + it.key() + "\" must be true or false");
        d.flags[*c] = it.value().get<bool>();
    }
    for (auto c : kIssueCategories) {
        if (!d.flags.count(c)) {
            throw ValidationError("flag \"" + std::string(to_string(c)) + "\" must be set explicitly");
        }
    }
    d.edited_query = required_string(j, "edited_query");
    d.edited_answer = required_string(j, "edited_answer");
    d.note = j.value("note", "");
    d.timestamp = j.value("timestamp", "");
    return d;
}

nlohmann::ordered_json to_json(const MetaReview& m) {
    nlohmann::ordered_json j;
    j["task_id"] = m.task_id;
    j["language"] = m.language;
    j["reviewer_id"] = m.reviewer_id;
    j["role"] = to_string(m.role);
    j["approve"] = m.approve;
    j["note"] = m.note;
    j["timestamp"] = m.timestamp;
    j["round"] = m.round;
    return j;
}

MetaReview meta_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("meta review must be an object");
    MetaReview m;
    m.task_id = required_string(j, "task_id");
    m.language = j.value("language", "");
    m.reviewer_id = required_string(j, "reviewer_id");
    auto role = parse_meta_role(required_string(j, "role"));
    if (!role) throw ValidationError("role must be linguist or researcher");
    m.role = *role;
    if (!j.contains("approve") || !j["approve"].is_boolean()) throw ValidationError("\"approve\" must be a boolean");
    m.approve = j["approve"].get<bool>();
    m.note = j.value("note", "");
    m.timestamp = j.value("timestamp", "");
    m.round = j.value("round", 0);
    return m;
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::ingest: return "ingest";
        case EventKind::findings_attached: return "findings_attached";
        case EventKind::task_claimed: return "task_claimed";
        case EventKind::review_submitted: return "review_submitted";
        case EventKind::meta_submitted: return "meta_submitted";
        case EventKind::state_changed: return "state_changed";
    }
    return "ingest";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
    for (auto k : {EventKind::ingest, EventKind::findings_attached, EventKind::task_claimed,
                   EventKind::review_submitted, EventKind::meta_submitted, EventKind::state_changed}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::string serialize_event(const AuditEvent& e) {
    nlohmann::ordered_json j;
    j["sequence"] = e.sequence;
    j["kind"] = to_string(e.kind);
    j["timestamp"] = e.timestamp;
    j["payload"] = e.payload;
    return j.dump();
}

AuditEvent parse_event(std::string_view line) {
    const auto j = nlohmann::ordered_json::parse(line);
    AuditEvent e;
    e.sequence = j.at("sequence").get<long long>();
    auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw CorruptLogError(e.sequence, "unknown event kind at #" + std::to_string(e.sequence));
    e.kind = *kind;
    e.timestamp = j.value("timestamp", "");
    e.payload = j.at("payload");
    return e;
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::info: return "info";
        case Severity::medium: return "medium";
        case Severity::high: return "high";
    }
    return "info";
}

CheckReport make_check_report(const TaskKey& key, const std::vector<FilterFinding>& findings,
                              const std::vector<JudgeVerdict>& verdicts) {
    CheckReport r{key, {}, 0};
    for (const auto& f : findings) {
        r.items.push_back({"filter", std::string(to_string(f.check)), f.passed, f.category,
                           f.passed ? Severity::info : Severity::high, f.detail});
        if (!f.passed) ++r.priority;
    }
    for (const auto& v : verdicts) {
        r.items.push_back({"judge", std::string(to_string(v.axis)), v.passed, category_for(v.axis),
                           v.passed ? Severity::info : Severity::medium, v.rationale});
        if (!v.passed) ++r.priority;
    }
    // Failures first, most severe first; stable keeps pipeline order otherwise.
    std::stable_sort(r.items.begin(), r.items.end(), [](const CheckItem& a, const CheckItem& b) {
        return static_cast<int>(a.severity) > static_cast<int>(b.severity);
    });
    return r;
}

nlohmann::ordered_json to_json(const CheckReport& r) {
    nlohmann::ordered_json j;
    j["task_id"] = r.key.task_id;
    j["language"] = r.key.language;
    j["priority"] = r.priority;
    auto items = nlohmann::ordered_json::array();
    for (const auto& it : r.items) {
        nlohmann::ordered_json i;
        i["source"] = it.source;
        i["name"] = it.name;
        i["passed"] = it.passed;
        i["category"] = to_string(it.category);
        i["severity"] = to_string(it.severity);
        i["detail"] = it.detail;
        items.push_back(std::move(i));
    }
    j["items"] = std::move(items);
    return j;
}

}  // namespace locaudit
