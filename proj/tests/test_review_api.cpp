#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "locaudit/review_api.hpp"
#include "test_support.hpp"

using namespace locaudit;

namespace {

std::string fixed_clock() { return "2024-05-01T00:00:00Z"; }

TaskPair pair_for(const std::string& id, const std::string& lang) {
    TaskRecord s{id, "en", Variant::english, 1, "How tall is it?", "12", "", id};
    TaskRecord t{id, lang, Variant::mt, 1, "Wie hoch ist es?", "12", "", id};
    return {s, t};
}

void seed(AuditStore& store) {
    store.ingest({pair_for("t1", "de"), pair_for("t2", "de"), pair_for("t1", "ko")});
    std::vector<FilterFinding> f{{FilterCheck::language_id, true, IssueCategory::hallucination, "", {}},
                                 {FilterCheck::answer_leak, false, IssueCategory::hallucination, "leak", {}},
                                 {FilterCheck::placeholder_recall, true, IssueCategory::adequacy, "", 1.0}};
    std::vector<JudgeVerdict> v;
    for (auto a : kJudgeAxes) v.push_back({a, true, "ok", "m", false});
    store.attach_findings({"de", "t1"}, f, v);
    store.attach_findings({"de", "t2"}, {}, {});
}

nlohmann::json all_flags(bool fluency) {
    nlohmann::json f;
    for (auto c : kIssueCategories) f[std::string(to_string(c))] = false;
    f["fluency"] = fluency;
    return f;
}

// Server on an ephemeral port, listening on a background thread.
class Running {
public:
    explicit Running(AuditStore& store) : server_(store) {
        port_ = server_.bind("127.0.0.1", 0);
        thread_ = std::thread([this] { server_.listen(); });
        server_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }
    ~Running() {
        server_.stop();
        thread_.join();
    }
    httplib::Client& client() { return *client_; }
    int port() const { return port_; }

    nlohmann::json post(const std::string& path, const nlohmann::json& body, int expect = 200) {
        auto res = client_->Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << ": " << res->body;
        return nlohmann::json::parse(res->body);
    }
    nlohmann::json get(const std::string& path, int expect = 200) {
        auto res = client_->Get(path);
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << ": " << res->body;
        return nlohmann::json::parse(res->body);
    }

private:
    ReviewServer server_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST(ReviewApi, FreshStoreStatsAreEmpty) {
    AuditStore store;
    Running srv(store);
    EXPECT_EQ(srv.get("/api/stats"), nlohmann::json::object());
    EXPECT_EQ(srv.get("/api/tasks"), nlohmann::json::array());
}

TEST(ReviewApi, FullRoundTripToApproved) {
    AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
    seed(store);
    Running srv(store);

    const auto listed = srv.get("/api/tasks?language=de&state=in_review");
    ASSERT_EQ(listed.size(), 2u);
    EXPECT_EQ(srv.get("/api/tasks?state=ingested").size(), 1u);
    srv.get("/api/tasks?state=bogus", 422);

    const auto claim = srv.post("/api/claims", {{"reviewer_id", "alice"}, {"language", "de"}});
    EXPECT_EQ(claim["task"]["task_id"], "t1");  // higher priority
    EXPECT_EQ(claim["source"]["language"], "en");
    EXPECT_EQ(claim["report"]["priority"], 1);
    EXPECT_EQ(claim["report"]["items"][0]["name"], "answer_leak");

    nlohmann::json review{{"reviewer_id", "alice"},       {"flags", all_flags(true)},
                          {"edited_query", "Wie hoch?"}, {"edited_answer", "12"},
                          {"note", "shorter"}};
    srv.post("/api/tasks/t1/review", review, 409);  // ambiguous id without language
    const auto r = srv.post("/api/tasks/t1/review?language=de", review);
    EXPECT_EQ(r["state"], "meta_pending");

    srv.post("/api/tasks/t1/meta?language=de", {{"reviewer_id", "alice"}, {"role", "linguist"}, {"approve", true}}, 409);
    srv.post("/api/tasks/t1/meta?language=de", {{"reviewer_id", "bob"}, {"role", "linguist"}, {"approve", true}});
    const auto m = srv.post("/api/tasks/t1/meta?language=de",
                            {{"reviewer_id", "carol"}, {"role", "researcher"}, {"approve", true}});
    EXPECT_EQ(m["state"], "approved");

    const auto detail = srv.get("/api/tasks/t1?language=de");
    EXPECT_EQ(detail["state"], "approved");
    EXPECT_EQ(detail["decisions"].size(), 1u);
    EXPECT_EQ(detail["meta_reviews"].size(), 2u);

    auto res = srv.client().Get("/api/export?language=de");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Content-Type"), "application/x-ndjson");
    EXPECT_EQ(res->get_header_value("X-Export-Note"), "1 approved tasks exported, 1 excluded (not approved)");
    const auto rec = nlohmann::json::parse(res->body.substr(0, res->body.find('\n')));
    EXPECT_EQ(rec["query"], "Wie hoch?");
    EXPECT_EQ(rec["variant"], "audited");

    const auto stats = srv.get("/api/stats");
    EXPECT_EQ(stats["de"]["tasks"], 2);
    EXPECT_EQ(stats["de"]["states"]["approved"], 1);
    EXPECT_EQ(stats["de"]["flags"]["fluency"], 1);
    EXPECT_EQ(stats["ko"]["states"]["ingested"], 1);
}

TEST(ReviewApi, ErrorMapping) {
    AuditStore store(AuditStore::Options{std::nullopt, fixed_clock});
    seed(store);
    Running srv(store);
    srv.get("/api/tasks/nope", 404);
    srv.get("/api/export", 422);
    srv.post("/api/claims", {{"language", "de"}}, 400);
    srv.post("/api/claims", {{"reviewer_id", "x"}, {"language", "pt"}}, 404);
    auto res = srv.client().Post("/api/claims", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_TRUE(nlohmann::json::parse(res->body).contains("error"));

    srv.post("/api/claims", {{"reviewer_id", "alice"}, {"language", "de"}});
    // Review by someone without the claim.
    srv.post("/api/tasks/t1/review?language=de",
             {{"reviewer_id", "mallory"}, {"flags", all_flags(false)}, {"edited_query", "Wie hoch ist es?"},
              {"edited_answer", "12"}},
             409);
    // Edit without a flag.
    srv.post("/api/tasks/t1/review?language=de",
             {{"reviewer_id", "alice"}, {"flags", all_flags(false)}, {"edited_query", "Anders?"}, {"edited_answer", "12"}},
             422);
}

TEST(ReviewApi, BusyPortIsAnError) {
    AuditStore store;
    Running srv(store);
    ReviewServer second(store);
    EXPECT_THROW(second.bind("127.0.0.1", srv.port()), Error);
}

TEST(ReviewApi, RestartReplaysIdenticalState) {
    testsupport::TempDir dir;
    nlohmann::json before;
    {
        auto store = AuditStore::open(dir.path(), fixed_clock);
        seed(store);
        Running srv(store);
        srv.post("/api/claims", {{"reviewer_id", "alice"}, {"language", "de"}});
        srv.post("/api/tasks/t1/review?language=de", {{"reviewer_id", "alice"},
                                                       {"flags", all_flags(true)},
                                                       {"edited_query", "Neu?"},
                                                       {"edited_answer", "12"}});
        before = srv.get("/api/tasks/t1?language=de");
    }
    auto store = AuditStore::open(dir.path(), fixed_clock);
    Running srv(store);
    EXPECT_EQ(srv.get("/api/tasks/t1?language=de"), before);
}

TEST(ReviewApi, ServesStaticAssets) {
    testsupport::TempDir dir;
    testsupport::write_file(dir / "index.html", "<html>review</html>");
    AuditStore store;
    ReviewServer server(store, dir.path());
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.listen(); });
    server.wait_until_ready();
    httplib::Client c("127.0.0.1", port);
    auto res = c.Get("/index.html");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "<html>review</html>");
    server.stop();
    t.join();
}
