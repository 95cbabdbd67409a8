#include "locaudit/audit_store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>
#include <set>

#include "locaudit/error.hpp"

namespace locaudit {

namespace {

TaskKey key_of(const nlohmann::json& payload) {
    return TaskKey{payload.at("language").get<std::string>(), payload.at("task_id").get<std::string>()};
}

TaskEntry& entry(StoreState& state, const TaskKey& key) {
    auto it = state.tasks.find(key);
    if (it == state.tasks.end()) throw NotFoundError("unknown task " + to_string(key));
    return it->second;
}

int compute_priority(const TaskEntry& e) {
    int p = 0;
    for (const auto& f : e.findings) p += f.passed ? 0 : 1;
    for (const auto& v : e.verdicts) p += v.passed ? 0 : 1;
    return p;
}

void require_state(const TaskEntry& e, const TaskKey& key, std::initializer_list<AuditState> allowed) {
    if (std::find(allowed.begin(), allowed.end(), e.state) != allowed.end()) return;
    std::string want;
    for (auto s : allowed) want += (want.empty() ? "" : " or ") + std::string(to_string(s));
    throw StateError("task " + to_string(key) + " is " + std::string(to_string(e.state)) + ", expected " + want);
}

// ReviewDecision invariants against the task it reviews.
void validate_decision(const ReviewDecision& d, const TaskEntry& e) {
    for (auto c : kIssueCategories) {
        if (!d.flags.count(c)) {
            throw ValidationError("flag \"" + std::string(to_string(c)) + "\" must be set explicitly");
        }
    }
    if (d.flags.size() != kIssueCategories.size()) throw ValidationError("unexpected flag keys");
    if (d.reviewer_id.empty()) throw ValidationError("reviewer_id must be non-empty");
    if (d.edited_answer.empty()) throw ValidationError("edited answer must be non-empty");
    if (!d.any_flag() &&
        (d.edited_query != e.pair.target.query || d.edited_answer != e.pair.target.answer)) {
        throw ValidationError("text was edited but no issue category is flagged");
    }
}

void validate_meta(const MetaReview& m, const TaskEntry& e) {
    if (m.reviewer_id.empty()) throw ValidationError("reviewer_id must be non-empty");
    const auto* decision = e.current_decision();
    if (decision && decision->reviewer_id == m.reviewer_id) {
        throw StateError("reviewer " + m.reviewer_id + " cannot meta-review their own review");
    }
    for (const auto& prior : e.current_meta_reviews()) {
        if (prior.role == m.role) {
            throw StateError("duplicate " + std::string(to_string(m.role)) + " meta-review for task " + m.task_id);
        }
        if (prior.reviewer_id == m.reviewer_id) {
            throw StateError("reviewer " + m.reviewer_id + " already meta-reviewed task " + m.task_id);
        }
    }
}

void apply_unchecked(StoreState& state, const AuditEvent& ev) {
    const auto& p = ev.payload;
    switch (ev.kind) {
        case EventKind::ingest: {
            TaskPair pair{record_from_json(p.at("source")), record_from_json(p.at("target"))};
            validate_pair(pair);
            const TaskKey key{pair.target.language, pair.target.task_id};
            if (state.tasks.count(key)) throw StateError("task " + to_string(key) + " already ingested");
            auto [it, inserted] = state.english.emplace(pair.source.task_id, pair.source);
            if (!inserted && it->second != pair.source) {
                throw StateError("english task " + pair.source.task_id + " ingested with different content");
            }
            TaskEntry e;
            e.pair = std::move(pair);
            state.tasks.emplace(key, std::move(e));
            break;
        }
        case EventKind::findings_attached: {
            const auto key = key_of(p);
            auto& e = entry(state, key);
            if (p.contains("findings")) {
                require_state(e, key, {AuditState::ingested});
                if (e.findings_attached) throw StateError("findings already attached to " + to_string(key));
                e.findings.clear();
                for (const auto& f : p["findings"]) e.findings.push_back(finding_from_json(f));
                e.findings_attached = true;
            }
            if (p.contains("verdicts")) {
                if (!p.contains("findings")) require_state(e, key, {AuditState::checked});
                if (e.verdicts_attached) throw StateError("verdicts already attached to " + to_string(key));
                e.verdicts.clear();
                for (const auto& v : p["verdicts"]) e.verdicts.push_back(verdict_from_json(v));
                e.verdicts_attached = true;
            }
            e.priority = compute_priority(e);
            break;
        }
        case EventKind::task_claimed: {
            const auto key = key_of(p);
            auto& e = entry(state, key);
            require_state(e, key, {AuditState::in_review, AuditState::returned});
            const auto reviewer = p.at("reviewer_id").get<std::string>();
            if (e.claimed_by && *e.claimed_by != reviewer) {
                throw StateError("task " + to_string(key) + " is claimed by " + *e.claimed_by);
            }
            e.claimed_by = reviewer;
            break;
        }
        case EventKind::review_submitted: {
            auto d = decision_from_json(p);
            const TaskKey key{d.language, d.task_id};
            auto& e = entry(state, key);
            require_state(e, key, {AuditState::in_review});
            if (e.claimed_by != d.reviewer_id) {
                throw StateError("task " + to_string(key) + " is not claimed by " + d.reviewer_id);
            }
            validate_decision(d, e);
            e.decisions.push_back(std::move(d));
            e.claimed_by.reset();
            break;
        }
        case EventKind::meta_submitted: {
            auto m = meta_from_json(p);
            const TaskKey key{m.language, m.task_id};
            auto& e = entry(state, key);
            require_state(e, key, {AuditState::meta_pending});
            if (m.round != e.round()) throw StateError("meta-review round mismatch for " + to_string(key));
            validate_meta(m, e);
            e.meta_reviews.push_back(std::move(m));
            break;
        }
        case EventKind::state_changed: {
            const auto key = key_of(p);
            auto& e = entry(state, key);
            auto from = parse_audit_state(p.at("from").get<std::string>());
            auto to = parse_audit_state(p.at("to").get<std::string>());
            if (!from || !to) throw StateError("unknown state in transition");
            if (e.state != *from) {
                throw StateError("transition from " + std::string(to_string(*from)) + " but task " +
                                 to_string(key) + " is " + std::string(to_string(e.state)));
            }
            if (!is_legal_transition(*from, *to)) {
                throw StateError("illegal transition " + std::string(to_string(*from)) + " -> " +
                                 std::string(to_string(*to)));
            }
            e.state = *to;
            break;
        }
    }
    state.last_sequence = ev.sequence;
    state.last_timestamp = ev.timestamp;
}

nlohmann::ordered_json key_payload(const TaskKey& key) {
    nlohmann::ordered_json j;
    j["task_id"] = key.task_id;
    j["language"] = key.language;
    return j;
}

nlohmann::ordered_json transition(const TaskKey& key, AuditState from, AuditState to) {
    auto j = key_payload(key);
    j["from"] = to_string(from);
    j["to"] = to_string(to);
    return j;
}

bool language_matches(const std::string& task_language, const std::string& wanted) {
    return wanted.empty() || task_language == wanted;
}

}  // namespace

std::vector<MetaReview> TaskEntry::current_meta_reviews() const {
    std::vector<MetaReview> out;
    for (const auto& m : meta_reviews) {
        if (m.round == round()) out.push_back(m);
    }
    return out;
}

void apply_event(StoreState& state, const AuditEvent& event) {
    try {
        apply_unchecked(state, event);
    } catch (const StateError&) {
        throw;
    } catch (const NotFoundError& e) {
        throw StateError(e.what());
    } catch (const ValidationError& e) {
        throw StateError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw StateError(std::string("malformed event payload: ") + e.what());
    }
}

StoreState replay(const std::vector<AuditEvent>& events) {
    StoreState state;
    long long expected = 1;
    for (const auto& ev : events) {
        if (ev.sequence != expected) {
            throw CorruptLogError(expected, "event log gap: expected #" + std::to_string(expected) + ", found #" +
                                                std::to_string(ev.sequence));
        }
        try {
            apply_event(state, ev);
        } catch (const StateError& e) {
            throw CorruptLogError(ev.sequence, "event #" + std::to_string(ev.sequence) + ": " + e.what());
        }
        ++expected;
    }
    return state;
}

std::vector<AuditEvent> read_event_log(const std::filesystem::path& path) {
    std::vector<AuditEvent> events;
    std::ifstream in(path);
    if (!in) return events;
    long long lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.empty()) continue;
        try {
            events.push_back(parse_event(line));
        } catch (const CorruptLogError&) {
            throw;
        } catch (const std::exception& e) {
            throw CorruptLogError(lineno, path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return events;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- AuditStore -----------------------------------------------------------

AuditStore::AuditStore() : AuditStore(Options{}) {}

AuditStore::AuditStore(Options options) : options_(std::move(options)) {
    if (!options_.clock) options_.clock = utc_now;
    if (options_.log_path) {
        log_ = read_event_log(*options_.log_path);
        state_ = replay(log_);
        log_file_.open(*options_.log_path, std::ios::binary | std::ios::app);
        if (!log_file_) throw Error("cannot open event log " + options_.log_path->string());
    }
}

AuditStore::AuditStore(AuditStore&& other) noexcept
    : options_(std::move(other.options_)),
      state_(std::move(other.state_)),
      log_(std::move(other.log_)),
      log_file_(std::move(other.log_file_)) {}

AuditStore AuditStore::open(const std::filesystem::path& project_dir, Clock clock) {
    std::filesystem::create_directories(project_dir);
    return AuditStore(Options{project_dir / kEventLogName, std::move(clock)});
}

AuditEvent AuditStore::make_event(EventKind kind, nlohmann::ordered_json payload, long long sequence) const {
    return AuditEvent{sequence, kind, options_.clock(), std::move(payload)};
}

void AuditStore::append(std::vector<AuditEvent> events) {
    // Apply to a scratch copy first so a rejected batch leaves neither the log
    // nor the view changed. Single-task batches only copy that task's entry.
    std::optional<TaskKey> single;
    bool one_task = !events.empty();
    for (const auto& ev : events) {
        if (ev.kind == EventKind::ingest) {
            one_task = false;
            break;
        }
        const auto k = key_of(ev.payload);
        if (single && *single != k) one_task = false;
        single = k;
    }

    StoreState scratch;
    if (one_task) {
        scratch.tasks.emplace(*single, entry(state_, *single));
        scratch.last_sequence = state_.last_sequence;
    } else {
        scratch = state_;
    }
    for (const auto& ev : events) apply_event(scratch, ev);

    if (log_file_.is_open()) {
        for (const auto& ev : events) log_file_ << serialize_event(ev) << '\n';
        log_file_.flush();
        if (!log_file_) throw Error("failed to write event log");
    }
    if (one_task) {
        state_.tasks.at(*single) = std::move(scratch.tasks.at(*single));
        state_.last_sequence = scratch.last_sequence;
        state_.last_timestamp = scratch.last_timestamp;
    } else {
        state_ = std::move(scratch);
    }
    for (auto& ev : events) log_.push_back(std::move(ev));
}

TaskEntry& AuditStore::entry_or_throw(const TaskKey& key) { return entry(state_, key); }

void AuditStore::ingest(const std::vector<TaskPair>& pairs) {
    std::unique_lock lock(mu_);
    std::set<TaskKey> batch;
    for (const auto& pair : pairs) {
        validate_pair(pair);
        const TaskKey key{pair.target.language, pair.target.task_id};
        if (state_.tasks.count(key) || !batch.insert(key).second) {
            throw ValidationError("duplicate task (" + pair.target.task_id + ", " +
                                  std::string(to_string(pair.target.variant)) + ", " + pair.target.language +
                                  ") already ingested");
        }
    }
    std::vector<AuditEvent> events;
    long long seq = state_.last_sequence;
    for (const auto& pair : pairs) {
        nlohmann::ordered_json payload;
        payload["source"] = record_to_json(pair.source);
        payload["target"] = record_to_json(pair.target);
        events.push_back(make_event(EventKind::ingest, std::move(payload), ++seq));
    }
    append(std::move(events));
}

AuditState AuditStore::attach_filter_findings(const TaskKey& key, std::vector<FilterFinding> findings) {
    std::unique_lock lock(mu_);
    auto& e = entry_or_throw(key);
    require_state(e, key, {AuditState::ingested});
    auto payload = key_payload(key);
    payload["findings"] = nlohmann::ordered_json::array();
    for (const auto& f : findings) payload["findings"].push_back(to_json(f));
    long long seq = state_.last_sequence;
    std::vector<AuditEvent> events;
    events.push_back(make_event(EventKind::findings_attached, std::move(payload), ++seq));
    events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::ingested, AuditState::checked), ++seq));
    append(std::move(events));
    return state_.tasks.at(key).state;
}

AuditState AuditStore::attach_verdicts(const TaskKey& key, std::vector<JudgeVerdict> verdicts) {
    std::unique_lock lock(mu_);
    auto& e = entry_or_throw(key);
    require_state(e, key, {AuditState::checked});
    auto payload = key_payload(key);
    payload["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : verdicts) payload["verdicts"].push_back(to_json(v));
    long long seq = state_.last_sequence;
    std::vector<AuditEvent> events;
    events.push_back(make_event(EventKind::findings_attached, std::move(payload), ++seq));
    events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::checked, AuditState::in_review), ++seq));
    append(std::move(events));
    return state_.tasks.at(key).state;
}

AuditState AuditStore::attach_findings(const TaskKey& key, std::vector<FilterFinding> findings,
                                       std::vector<JudgeVerdict> verdicts) {
    std::unique_lock lock(mu_);
    auto& e = entry_or_throw(key);
    require_state(e, key, {AuditState::ingested});
    auto payload = key_payload(key);
    payload["findings"] = nlohmann::ordered_json::array();
    for (const auto& f : findings) payload["findings"].push_back(to_json(f));
    payload["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : verdicts) payload["verdicts"].push_back(to_json(v));
    long long seq = state_.last_sequence;
    std::vector<AuditEvent> events;
    events.push_back(make_event(EventKind::findings_attached, std::move(payload), ++seq));
    events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::ingested, AuditState::checked), ++seq));
    events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::checked, AuditState::in_review), ++seq));
    append(std::move(events));
    return state_.tasks.at(key).state;
}

ClaimedTask AuditStore::next_task(const std::string& reviewer_id, const std::string& language) {
    std::unique_lock lock(mu_);
    if (reviewer_id.empty()) throw ValidationError("reviewer_id must be non-empty");

    const std::pair<const TaskKey, TaskEntry>* chosen = nullptr;
    for (const auto& kv : state_.tasks) {
        const auto& e = kv.second;
        if (!language_matches(kv.first.language, language)) continue;
        if (e.state != AuditState::in_review && e.state != AuditState::returned) continue;
        if (e.claimed_by == reviewer_id) {
            chosen = &kv;
            break;
        }
        if (e.claimed_by) continue;
        // Map order is by (language, task_id), so the first of equal priority wins.
        if (!chosen || e.priority > chosen->second.priority) chosen = &kv;
    }
    if (!chosen) throw NotFoundError("no task available for review in " + (language.empty() ? "any language" : language));

    const TaskKey key = chosen->first;
    const auto& e = chosen->second;
    if (e.claimed_by != reviewer_id) {
        auto payload = key_payload(key);
        payload["reviewer_id"] = reviewer_id;
        long long seq = state_.last_sequence;
        std::vector<AuditEvent> events;
        events.push_back(make_event(EventKind::task_claimed, std::move(payload), ++seq));
        if (e.state == AuditState::returned) {
            events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::returned, AuditState::in_review), ++seq));
        }
        append(std::move(events));
    }
    const auto& claimed = state_.tasks.at(key);
    return ClaimedTask{claimed.pair.target, claimed.pair.source,
                       make_check_report(key, claimed.findings, claimed.verdicts), claimed.decisions,
                       claimed.meta_reviews};
}

AuditState AuditStore::submit_review(ReviewDecision decision) {
    std::unique_lock lock(mu_);
    if (decision.language.empty()) {
        lock.unlock();
        decision.language = resolve(decision.task_id).language;
        lock.lock();
    }
    const TaskKey key{decision.language, decision.task_id};
    auto& e = entry_or_throw(key);
    require_state(e, key, {AuditState::in_review});
    if (e.claimed_by != decision.reviewer_id) {
        throw StateError("task " + to_string(key) + " is not claimed by " + decision.reviewer_id);
    }
    validate_decision(decision, e);
    if (decision.timestamp.empty()) decision.timestamp = options_.clock();

    long long seq = state_.last_sequence;
    std::vector<AuditEvent> events;
    events.push_back(make_event(EventKind::review_submitted, to_json(decision), ++seq));
    events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::in_review, AuditState::reviewed), ++seq));
    events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::reviewed, AuditState::meta_pending), ++seq));
    append(std::move(events));
    return state_.tasks.at(key).state;
}

AuditState AuditStore::submit_meta_review(MetaReview review) {
    std::unique_lock lock(mu_);
    if (review.language.empty()) {
        lock.unlock();
        review.language = resolve(review.task_id).language;
        lock.lock();
    }
    const TaskKey key{review.language, review.task_id};
    auto& e = entry_or_throw(key);
    require_state(e, key, {AuditState::meta_pending});
    validate_meta(review, e);
    review.round = e.round();
    if (review.timestamp.empty()) review.timestamp = options_.clock();

    auto prior = e.current_meta_reviews();
    long long seq = state_.last_sequence;
    std::vector<AuditEvent> events;
    const bool approve = review.approve;
    const MetaRole role = review.role;
    events.push_back(make_event(EventKind::meta_submitted, to_json(review), ++seq));
    if (!approve) {
        events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::meta_pending, AuditState::returned), ++seq));
    } else {
        const bool other_role_approved = std::any_of(prior.begin(), prior.end(), [&](const MetaReview& m) {
            return m.role != role && m.approve;
        });
        if (other_role_approved) {
            events.push_back(make_event(EventKind::state_changed, transition(key, AuditState::meta_pending, AuditState::approved), ++seq));
        }
    }
    append(std::move(events));
    return state_.tasks.at(key).state;
}

Dataset AuditStore::export_audited(const std::string& language) const {
    std::shared_lock lock(mu_);
    Dataset d;
    std::size_t excluded = 0;
    for (const auto& [key, e] : state_.tasks) {
        if (key.language != language) continue;
        if (e.state != AuditState::approved) {
            ++excluded;
            continue;
        }
        TaskRecord r = e.pair.target;
        r.variant = Variant::audited;
        r.query = e.current_decision()->edited_query;
        r.answer = e.current_decision()->edited_answer;
        d.records.push_back(std::move(r));
    }
    std::sort(d.records.begin(), d.records.end(),
              [](const TaskRecord& a, const TaskRecord& b) { return a.task_id < b.task_id; });
    d.metadata.name = "audited-" + language;
    d.metadata.created = state_.last_timestamp;
    d.metadata.provenance = std::to_string(d.records.size()) + " approved tasks exported, " +
                            std::to_string(excluded) + " excluded (not approved)";
    return d;
}

StoreState AuditStore::snapshot() const {
    std::shared_lock lock(mu_);
    return state_;
}

std::vector<AuditEvent> AuditStore::events() const {
    std::shared_lock lock(mu_);
    return log_;
}

std::optional<TaskEntry> AuditStore::find(const TaskKey& key) const {
    std::shared_lock lock(mu_);
    auto it = state_.tasks.find(key);
    if (it == state_.tasks.end()) return std::nullopt;
    return it->second;
}

TaskKey AuditStore::resolve(const std::string& task_id, const std::string& language) const {
    std::shared_lock lock(mu_);
    std::vector<TaskKey> hits;
    for (const auto& [key, _] : state_.tasks) {
        if (key.task_id == task_id && language_matches(key.language, language)) hits.push_back(key);
    }
    if (hits.empty()) throw NotFoundError("unknown task " + task_id);
    if (hits.size() > 1) throw StateError("task id " + task_id + " exists in several languages; pass language");
    return hits.front();
}

std::vector<TaskSummary> AuditStore::list(const std::string& language, std::optional<AuditState> state) const {
    std::shared_lock lock(mu_);
    std::vector<TaskSummary> out;
    for (const auto& [key, e] : state_.tasks) {
        if (!language_matches(key.language, language)) continue;
        if (state && e.state != *state) continue;
        TaskSummary s{key, e.state, e.priority, 0, 0, e.claimed_by};
        for (const auto& f : e.findings) s.failed_filters += f.passed ? 0 : 1;
        for (const auto& v : e.verdicts) s.failed_judges += v.passed ? 0 : 1;
        out.push_back(std::move(s));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TaskSummary& a, const TaskSummary& b) { return a.priority > b.priority; });
    return out;
}

std::map<std::string, LanguageStats> AuditStore::stats() const {
    std::shared_lock lock(mu_);
    std::map<std::string, LanguageStats> out;
    for (const auto& [key, e] : state_.tasks) {
        auto& s = out[key.language];
        if (s.states.empty()) {
            for (auto st : kAuditStates) s.states[st] = 0;
            for (auto c : kIssueCategories) s.flags[c] = 0;
        }
        ++s.tasks;
        ++s.states[e.state];
        if (const auto* d = e.current_decision()) {
            for (const auto& [c, flagged] : d->flags) s.flags[c] += flagged ? 1 : 0;
        }
    }
    return out;
}

}  // namespace locaudit
