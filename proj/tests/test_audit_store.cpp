#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "locaudit/audit_store.hpp"
#include "test_support.hpp"

using namespace locaudit;

namespace {

std::string fixed_clock() { return "2024-05-01T00:00:00Z"; }

TaskPair pair_for(const std::string& id, const std::string& lang, const std::string& query = "Frage?",
                  const std::string& answer = "Antwort") {
    TaskRecord s{id, "en", Variant::english, 1, "Question " + id + "?", "answer", "", id};
    TaskRecord t{id, lang, Variant::mt, 1, query, answer, "", id};
    return {s, t};
}

std::vector<FilterFinding> findings(int failures) {
    std::vector<FilterFinding> out;
    for (int i = 0; i < 3; ++i) {
        out.push_back(FilterFinding{static_cast<FilterCheck>(i), i >= failures, IssueCategory::hallucination, "", {}});
    }
    return out;
}

std::vector<JudgeVerdict> verdicts(int failures = 0) {
    std::vector<JudgeVerdict> out;
    for (std::size_t i = 0; i < kJudgeAxes.size(); ++i) {
        out.push_back(JudgeVerdict{kJudgeAxes[i], static_cast<int>(i) >= failures, "", "m", false});
    }
    return out;
}

IssueFlags flags(std::initializer_list<IssueCategory> on = {}) {
    IssueFlags f;
    for (auto c : kIssueCategories) f[c] = false;
    for (auto c : on) f[c] = true;
    return f;
}

ReviewDecision decision(const TaskKey& k, const std::string& reviewer, IssueFlags f = flags(),
                        std::string query = "Frage?", std::string answer = "Antwort") {
    return ReviewDecision{k.task_id, k.language, reviewer, std::move(f), std::move(query), std::move(answer), "", ""};
}

MetaReview meta(const TaskKey& k, const std::string& reviewer, MetaRole role, bool approve) {
    return MetaReview{k.task_id, k.language, reviewer, role, approve, "", "", 0};
}

AuditStore ready_store(std::initializer_list<std::string> ids, const std::string& lang = "de") {
    AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
    std::vector<TaskPair> pairs;
    for (const auto& id : ids) pairs.push_back(pair_for(id, lang));
    store.ingest(pairs);
    for (const auto& id : ids) store.attach_findings({lang, id}, findings(0), verdicts());
    return store;
}

}  // namespace

TEST(Transitions, Table) {
    using S = AuditState;
    std::set<std::pair<S, S>> legal{{S::ingested, S::checked},       {S::checked, S::in_review},
                                    {S::in_review, S::reviewed},     {S::reviewed, S::meta_pending},
                                    {S::meta_pending, S::approved},  {S::meta_pending, S::returned},
                                    {S::returned, S::in_review}};
    for (auto a : kAuditStates) {
        for (auto b : kAuditStates) EXPECT_EQ(is_legal_transition(a, b), legal.count({a, b}) == 1);
    }
}

TEST(Store, HappyPathToApproved) {
    auto store = ready_store({"t1"});
    const TaskKey k{"de", "t1"};
    const auto claimed = store.next_task("alice", "de");
    EXPECT_EQ(claimed.task.task_id, "t1");
    EXPECT_EQ(claimed.source.language, "en");
    EXPECT_EQ(store.submit_review(decision(k, "alice", flags({IssueCategory::fluency}), "Neue Frage?")),
              AuditState::meta_pending);
    EXPECT_EQ(store.submit_meta_review(meta(k, "bob", MetaRole::linguist, true)), AuditState::meta_pending);
    EXPECT_EQ(store.submit_meta_review(meta(k, "carol", MetaRole::researcher, true)), AuditState::approved);

    const auto d = store.export_audited("de");
    ASSERT_EQ(d.records.size(), 1u);
    EXPECT_EQ(d.records[0].variant, Variant::audited);
    EXPECT_EQ(d.records[0].query, "Neue Frage?");
    EXPECT_EQ(d.metadata.provenance, "1 approved tasks exported, 0 excluded (not approved)");
}

TEST(Store, StageGates) {
    AuditStore store;
    store.ingest({pair_for("t1", "de")});
    const TaskKey k{"de", "t1"};
    EXPECT_THROW(store.attach_verdicts(k, verdicts()), StateError);
    EXPECT_THROW(store.next_task("alice", "de"), NotFoundError);
    EXPECT_EQ(store.attach_filter_findings(k, findings(1)), AuditState::checked);
    EXPECT_THROW(store.attach_filter_findings(k, findings(0)), StateError);
    EXPECT_EQ(store.attach_verdicts(k, verdicts(2)), AuditState::in_review);
    EXPECT_EQ(store.find(k)->priority, 3);
    EXPECT_THROW(store.submit_meta_review(meta(k, "bob", MetaRole::linguist, true)), StateError);
    EXPECT_THROW(store.attach_filter_findings({"de", "nope"}, findings(0)), NotFoundError);
}

TEST(Store, IngestIsAllOrNothing) {
    AuditStore store;
    store.ingest({pair_for("t1", "de")});
    EXPECT_THROW(store.ingest({pair_for("t2", "de"), pair_for("t1", "de")}), ValidationError);
    EXPECT_FALSE(store.find({"de", "t2"}));
    // Same id in another language is a different task.
    store.ingest({pair_for("t1", "ko")});
    EXPECT_THROW(store.resolve("t1"), StateError);
    EXPECT_EQ(store.resolve("t1", "ko").language, "ko");
    EXPECT_THROW(store.resolve("zz"), NotFoundError);
}

TEST(Store, ClaimExclusivityAndPriority) {
    AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
    store.ingest({pair_for("a", "de"), pair_for("b", "de"), pair_for("c", "de")});
    store.attach_findings({"de", "a"}, findings(0), verdicts(0));
    store.attach_findings({"de", "b"}, findings(2), verdicts(0));
    store.attach_findings({"de", "c"}, findings(2), verdicts(0));
    EXPECT_EQ(store.next_task("r1", "de").task.task_id, "b");
    EXPECT_EQ(store.next_task("r1", "de").task.task_id, "b");  // same claim returned
    EXPECT_EQ(store.next_task("r2", "de").task.task_id, "c");
    EXPECT_EQ(store.next_task("r3", "de").task.task_id, "a");
    EXPECT_THROW(store.next_task("r4", "de"), NotFoundError);
    EXPECT_THROW(store.submit_review(decision({"de", "b"}, "r2")), StateError);
    EXPECT_THROW(store.next_task("", "de"), ValidationError);
}

TEST(Store, ConcurrentClaimsNeverShareATask) {
    std::vector<std::string> ids;
    AuditStore store;
    std::vector<TaskPair> pairs;
    for (int i = 0; i < 40; ++i) pairs.push_back(pair_for("t" + std::to_string(100 + i), "de"));
    store.ingest(pairs);
    for (const auto& p : pairs) store.attach_findings({"de", p.target.task_id}, findings(0), verdicts());
    std::vector<std::string> got(40);
    std::vector<std::thread> threads;
    for (int i = 0; i < 40; ++i) {
        threads.emplace_back([&, i] { got[i] = store.next_task("r" + std::to_string(i), "de").task.task_id; });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), 40u);
}

TEST(Store, DecisionValidation) {
    auto store = ready_store({"t1"});
    const TaskKey k{"de", "t1"};
    store.next_task("alice", "de");
    auto missing = decision(k, "alice");
    missing.flags.erase(IssueCategory::adequacy);
    EXPECT_THROW(store.submit_review(missing), ValidationError);
    EXPECT_THROW(store.submit_review(decision(k, "alice", flags(), "Geändert?")), ValidationError);
    EXPECT_THROW(store.submit_review(decision(k, "alice", flags({IssueCategory::fluency}), "x", "")), ValidationError);
    auto r = decision(k, "alice");
    r.language = "";
    EXPECT_EQ(store.submit_review(r), AuditState::meta_pending);
}

TEST(Store, MetaReviewRules) {
    auto store = ready_store({"t1"});
    const TaskKey k{"de", "t1"};
    store.next_task("alice", "de");
    store.submit_review(decision(k, "alice"));
    EXPECT_THROW(store.submit_meta_review(meta(k, "alice", MetaRole::linguist, true)), StateError);
    store.submit_meta_review(meta(k, "bob", MetaRole::linguist, true));
    EXPECT_THROW(store.submit_meta_review(meta(k, "dave", MetaRole::linguist, true)), StateError);
    EXPECT_THROW(store.submit_meta_review(meta(k, "bob", MetaRole::researcher, true)), StateError);
    EXPECT_EQ(store.submit_meta_review(meta(k, "carol", MetaRole::researcher, false)), AuditState::returned);

    // Returned: claimable again, history is kept, new round needs fresh approvals.
    const auto again = store.next_task("erin", "de");
    EXPECT_EQ(again.prior_decisions.size(), 1u);
    EXPECT_EQ(again.prior_meta_reviews.size(), 2u);
    EXPECT_EQ(store.find(k)->state, AuditState::in_review);
    store.submit_review(decision(k, "erin", flags({IssueCategory::adequacy}), "Frage, neu?"));
    EXPECT_EQ(store.submit_meta_review(meta(k, "bob", MetaRole::linguist, true)), AuditState::meta_pending);
    EXPECT_EQ(store.submit_meta_review(meta(k, "alice", MetaRole::researcher, true)), AuditState::approved);
    const auto e = *store.find(k);
    EXPECT_EQ(e.round(), 2);
    EXPECT_EQ(e.current_meta_reviews().size(), 2u);
    EXPECT_EQ(e.meta_reviews.size(), 4u);
}

TEST(Store, ExportExcludesUnapprovedAndRecordsCount) {
    auto store = ready_store({"t1", "t2", "t3"});
    store.next_task("a", "de");
    store.submit_review(decision({"de", "t1"}, "a"));
    store.submit_meta_review(meta({"de", "t1"}, "b", MetaRole::linguist, true));
    store.submit_meta_review(meta({"de", "t1"}, "c", MetaRole::researcher, true));
    const auto d = store.export_audited("de");
    ASSERT_EQ(d.records.size(), 1u);
    EXPECT_EQ(d.metadata.provenance, "1 approved tasks exported, 2 excluded (not approved)");
    EXPECT_TRUE(store.export_audited("ko").records.empty());
}

TEST(Store, StatsAndList) {
    auto store = ready_store({"t1", "t2"});
    store.next_task("a", "de");
    store.submit_review(decision({"de", "t1"}, "a", flags({IssueCategory::fluency, IssueCategory::cultural_alignment})));
    const auto stats = store.stats();
    ASSERT_EQ(stats.count("de"), 1u);
    EXPECT_EQ(stats.at("de").tasks, 2);
    EXPECT_EQ(stats.at("de").states.at(AuditState::meta_pending), 1);
    EXPECT_EQ(stats.at("de").flags.at(IssueCategory::fluency), 1);
    EXPECT_EQ(store.list("de", AuditState::in_review).size(), 1u);
    EXPECT_EQ(store.list("ko").size(), 0u);
}

TEST(Persistence, ReopenReplaysToIdenticalState) {
    testsupport::TempDir dir;
    StoreState before;
    {
        auto store = AuditStore::open(dir.path(), fixed_clock);
        store.ingest({pair_for("t1", "de"), pair_for("t2", "de")});
        store.attach_findings({"de", "t1"}, findings(1), verdicts(1));
        store.next_task("a", "de");
        store.submit_review(decision({"de", "t1"}, "a", flags({IssueCategory::fluency}), "Neu?"));
        before = store.snapshot();
    }
    auto reopened = AuditStore::open(dir.path(), fixed_clock);
    EXPECT_EQ(reopened.snapshot(), before);
    EXPECT_EQ(replay(read_event_log(dir / kEventLogName)), before);
    // Appends continue the sequence.
    reopened.submit_meta_review(meta({"de", "t1"}, "b", MetaRole::linguist, true));
    EXPECT_EQ(reopened.events().back().sequence, before.last_sequence + 2 - 1);
}

TEST(Persistence, GapAndCorruptionAreReported) {
    AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
    store.ingest({pair_for("t1", "de")});
    store.attach_findings({"de", "t1"}, findings(0), verdicts());
    auto events = store.events();
    ASSERT_GE(events.size(), 4u);
    auto gapped = events;
    gapped.erase(gapped.begin() + 2);
    try {
        replay(gapped);
        FAIL() << "expected CorruptLogError";
    } catch (const CorruptLogError& e) {
        EXPECT_EQ(e.sequence(), 3);
        EXPECT_NE(std::string(e.what()).find("#3"), std::string::npos);
    }

    auto illegal = events;
    illegal.back().payload["to"] = "approved";
    EXPECT_THROW(replay(illegal), CorruptLogError);

    testsupport::TempDir dir;
    std::string text;
    for (const auto& e : events) text += serialize_event(e) + "\n";
    text += "{\"sequence\": 5, garbage\n";
    testsupport::write_file(dir / kEventLogName, text);
    EXPECT_THROW(AuditStore::open(dir.path(), fixed_clock), CorruptLogError);
}

TEST(Events, SerializeRoundTrip) {
    AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
    store.ingest({pair_for("t1", "ko", "질문?", "답")});
    store.attach_findings({"ko", "t1"}, findings(2), verdicts(1));
    for (const auto& e : store.events()) EXPECT_EQ(parse_event(serialize_event(e)), e);
}

TEST(CheckReport, SeverityAndPriority) {
    const auto r = make_check_report({"de", "t1"}, findings(1), verdicts(2));
    EXPECT_EQ(r.priority, 3);
    ASSERT_EQ(r.items.size(), 7u);
    // Failures first, most severe first, pipeline order within a severity.
    EXPECT_EQ(r.items[0].severity, Severity::high);
    EXPECT_EQ(r.items[0].name, "language_id");
    EXPECT_EQ(r.items[1].source, "judge");
    EXPECT_EQ(r.items[1].name, "fluency");
    EXPECT_EQ(r.items[2].name, "adequacy");
    EXPECT_EQ(r.items[2].severity, Severity::medium);
    EXPECT_EQ(r.items[3].severity, Severity::info);
    EXPECT_EQ(r.items[3].name, "answer_leak");
}

// Random operation sequences against the store. After every operation the
// materialized view must equal a replay of the log, and global invariants
// must hold. Rejected operations must leave the log untouched.
TEST(StoreProperty, RandomOperationSequences) {
    std::mt19937_64 rng(2024);
    const std::vector<std::string> reviewers{"r1", "r2", "r3", "r4"};
    const std::vector<std::string> langs{"de", "ko"};
    for (int run = 0; run < 150; ++run) {
        AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
        std::vector<TaskPair> pairs;
        for (int i = 0; i < 4; ++i) pairs.push_back(pair_for("t" + std::to_string(i), langs[i % 2]));
        store.ingest(pairs);
        std::uniform_int_distribution<int> op(0, 6), pick(0, 3), coin(0, 1);
        for (int step = 0; step < 60; ++step) {
            const auto& p = pairs[pick(rng)];
            const TaskKey k{p.target.language, p.target.task_id};
            const auto& who = reviewers[pick(rng)];
            const auto before = store.events().size();
            bool accepted = true;
            try {
                switch (op(rng)) {
                    case 0: store.attach_filter_findings(k, findings(pick(rng) % 3)); break;
                    case 1: store.attach_verdicts(k, verdicts(pick(rng))); break;
                    case 2: store.next_task(who, langs[coin(rng)]); break;
                    case 3: store.submit_review(decision(k, who, coin(rng) ? flags() : flags({IssueCategory::fluency}))); break;
                    case 4: store.submit_meta_review(meta(k, who, MetaRole::linguist, coin(rng) || coin(rng))); break;
                    case 5: store.submit_meta_review(meta(k, who, MetaRole::researcher, coin(rng) || coin(rng))); break;
                    case 6: store.attach_findings(k, findings(0), verdicts()); break;
                }
            } catch (const Error&) {
                accepted = false;
            }
            const auto events = store.events();
            if (!accepted) {
                ASSERT_EQ(events.size(), before);
            }
            for (std::size_t i = 0; i < events.size(); ++i) ASSERT_EQ(events[i].sequence, static_cast<long long>(i + 1));
            const auto snap = store.snapshot();
            ASSERT_EQ(replay(events), snap);

            std::map<std::string, std::set<std::string>> claims;
            for (const auto& [key, e] : snap.tasks) {
                if (e.claimed_by) {
                    ASSERT_TRUE(e.state == AuditState::in_review || e.state == AuditState::returned);
                    claims[key.language].insert(key.task_id);
                }
                if (e.state == AuditState::approved) {
                    const auto cur = e.current_meta_reviews();
                    std::set<MetaRole> roles;
                    std::set<std::string> people;
                    for (const auto& m : cur) {
                        ASSERT_TRUE(m.approve);
                        ASSERT_NE(m.reviewer_id, e.current_decision()->reviewer_id);
                        roles.insert(m.role);
                        people.insert(m.reviewer_id);
                    }
                    ASSERT_EQ(roles.size(), 2u);
                    ASSERT_EQ(people.size(), 2u);
                }
                if (e.state == AuditState::meta_pending || e.state == AuditState::approved) {
                    ASSERT_NE(e.current_decision(), nullptr);
                }
            }
            // At most one live claim per reviewer per language.
            std::map<std::pair<std::string, std::string>, int> per_reviewer;
            for (const auto& [key, e] : snap.tasks) {
                if (e.claimed_by) {
                    ASSERT_LE(++per_reviewer[std::make_pair(key.language, *e.claimed_by)], 1);
                }
            }
        }
        for (const auto& l : langs) {
            const auto d = store.export_audited(l);
            for (const auto& r : d.records) {
                ASSERT_EQ(store.find({l, r.task_id})->state, AuditState::approved);
            }
        }
    }
}
