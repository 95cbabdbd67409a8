#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>

#include "locaudit/audit_store.hpp"
#include "locaudit/error.hpp"
#include "locaudit/pipeline.hpp"
#include "test_support.hpp"

using namespace locaudit;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string output;  // stdout and stderr
};

Run run_cli(const std::string& args) {
    const std::string cmd = testsupport::cli_path() + " " + args + " 2>&1";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), p)) > 0;) r.output.append(buf.data(), n);
    const int st = ::pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string bench(const std::string& name) { return testsupport::fixture("minibench/" + name).string(); }

ProjectConfig mock_config(const fs::path& dir) {
    ProjectConfig c = ProjectConfig::load(dir);
    c.mock = true;
    c.judge_script = bench("judge.jsonl");
    c.agent_script = bench("agent.jsonl");
    return c;
}

}  // namespace

TEST(Config, Validation) {
    testsupport::TempDir dir;
    ProjectConfig c;
    c.project_dir = dir.path();
    EXPECT_NO_THROW(c.validate());
    c.languages = {"de", "pt-BR"};
    EXPECT_NO_THROW(c.validate());
    c.languages = {"xx"};
    EXPECT_THROW(c.validate(), ValidationError);
    c.languages = {};
    c.judge.parallelism = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = ProjectConfig{};
    c.project_dir = dir / "missing";
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Config, LoadsProjectFile) {
    testsupport::TempDir dir;
    testsupport::write_file(dir / kConfigFileName,
                            R"({"languages": ["ko"], "judge": {"model": "j2", "parallelism": 2},
                                "agent": {"endpoint": "http://127.0.0.1:9/solve", "model": "a1", "timeout_seconds": 30}})");
    const auto c = ProjectConfig::load(dir.path());
    EXPECT_EQ(c.languages, std::vector<std::string>{"ko"});
    EXPECT_EQ(c.judge.model, "j2");
    EXPECT_EQ(c.judge.parallelism, 2u);
    EXPECT_EQ(c.agent.transport, AgentTransport::http);
    EXPECT_EQ(c.agent_model, "a1");
    EXPECT_EQ(c.agent.timeout_seconds, 30);
    testsupport::write_file(dir / kConfigFileName, R"({"judge": {"parallelism": "many"}})");
    EXPECT_THROW(ProjectConfig::load(dir.path()), ValidationError);
    testsupport::write_file(dir / kConfigFileName, "{");
    EXPECT_THROW(ProjectConfig::load(dir.path()), ValidationError);
}

TEST(Pipeline, StagesRunInOrderAndRerunsAreStable) {
    testsupport::TempDir dir;
    const auto c = mock_config(dir.path());

    EXPECT_THROW(cmd_report(c, ReportKind::flips), Error);  // nothing ingested yet

    const auto ingest = cmd_ingest(c, bench("english.jsonl"), bench("translated.jsonl"));
    EXPECT_NE(ingest.output.find("40 tasks ingested"), std::string::npos);
    EXPECT_THROW(cmd_ingest(c, bench("english.jsonl"), bench("translated.jsonl")), Error);

    try {
        cmd_judge(c);
        FAIL() << "judge before check should fail";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("run check first"), std::string::npos);
    }

    const auto check = cmd_check(c);
    EXPECT_NE(check.output.find("40 tasks checked"), std::string::npos);
    EXPECT_NE(check.output.find("language_id: 3 failed"), std::string::npos);
    EXPECT_EQ(cmd_check(c).output, check.output);

    const auto judge = cmd_judge(c);
    EXPECT_TRUE(judge.ok);
    EXPECT_NE(judge.output.find("160 verdicts, 6 failed"), std::string::npos);
    const auto again = cmd_judge(c);
    EXPECT_NE(again.output.find("cache hits: 100"), std::string::npos);

    EXPECT_THROW(cmd_eval(c, Variant::audited), Error);  // no export yet
    const auto reviews = cmd_review_script(c, bench("reviews.jsonl"));
    EXPECT_NE(reviews.output.find("40 reviews submitted (11 flagged), 40 approved"), std::string::npos);
    EXPECT_NE(cmd_review_script(c, bench("reviews.jsonl")).output.find("no tasks awaiting review"), std::string::npos);

    cmd_export(c);
    EXPECT_TRUE(fs::exists(export_path(c, "de")));
    EXPECT_TRUE(fs::exists(export_path(c, "ko")));

    try {
        cmd_report(c, ReportKind::flips);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("run eval on both variants first"), std::string::npos);
    }

    const auto mt = cmd_eval(c, Variant::mt);
    EXPECT_NE(mt.output.find("mt de: 16/20 correct (80.0)"), std::string::npos);
    EXPECT_NE(mt.output.find("mt ko: 14/20 correct (70.0)"), std::string::npos);
    const auto au = cmd_eval(c, Variant::audited);
    EXPECT_NE(au.output.find("audited de: 19/20"), std::string::npos);
    EXPECT_NE(au.output.find("audited ko: 18/20"), std::string::npos);
    cmd_eval(c, Variant::english);

    const auto table = cmd_report(c, ReportKind::eval_table);
    EXPECT_NE(table.output.find("+15.0"), std::string::npos);
    EXPECT_NE(table.output.find("+20.0"), std::string::npos);
    EXPECT_TRUE(fs::exists(report_path(c, ReportKind::eval_table, "txt")));
    EXPECT_TRUE(fs::exists(report_path(c, ReportKind::eval_table, "jsonl")));
    EXPECT_NO_THROW(cmd_report(c, ReportKind::flips));
    EXPECT_NO_THROW(cmd_report(c, ReportKind::flags));
    EXPECT_NE(cmd_report(c, ReportKind::edit_rates).output.find("25.0"), std::string::npos);

    // The event log replays to the same state the commands left behind.
    auto store = AuditStore::open(c.project_dir);
    EXPECT_EQ(replay(store.events()), store.snapshot());
}

TEST(Pipeline, LanguageFilter) {
    testsupport::TempDir dir;
    auto c = mock_config(dir.path());
    c.languages = {"ko"};
    EXPECT_NE(cmd_ingest(c, bench("english.jsonl"), bench("translated.jsonl")).output.find("20 tasks ingested"),
              std::string::npos);
}

TEST(Pipeline, DanglingSourceIdIsRejected) {
    testsupport::TempDir dir;
    testsupport::write_file(dir / "tr.jsonl",
                            R"({"task_id": "x1", "language": "de", "variant": "mt", "level": 1, "query": "Frage?", "answer": "a", "file_name": "", "source_task_id": "ghost"})"
                            "\n");
    const auto c = mock_config(dir.path());
    try {
        cmd_ingest(c, bench("english.jsonl"), (dir / "tr.jsonl").string());
        FAIL() << "expected PairingError";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
    }
}

TEST(Cli, EndToEndMockRun) {
    testsupport::TempDir dir;
    const std::string p = "--project " + dir.path().string() + " --mock --judge-script " + bench("judge.jsonl") +
                          " --agent-script " + bench("agent.jsonl") + " ";
    auto r = run_cli(p + "ingest " + bench("english.jsonl") + " " + bench("translated.jsonl"));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("40 tasks ingested"), std::string::npos);
    ASSERT_EQ(run_cli(p + "check").status, 0);
    ASSERT_EQ(run_cli(p + "judge").status, 0);
    r = run_cli(p + "review-script " + bench("reviews.jsonl"));
    ASSERT_EQ(r.status, 0) << r.output;
    ASSERT_EQ(run_cli(p + "export").status, 0);
    ASSERT_EQ(run_cli(p + "eval --variant mt").status, 0);
    r = run_cli(p + "report flips");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("run eval on both variants first"), std::string::npos);
    ASSERT_EQ(run_cli(p + "eval --variant audited").status, 0);
    r = run_cli(p + "report eval-table");
    EXPECT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("+15.0"), std::string::npos);
}

TEST(Cli, ErrorsExitNonzero) {
    testsupport::TempDir dir;
    auto r = run_cli("--project " + (dir / "missing").string() + " check");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("error:"), std::string::npos);

    testsupport::write_file(dir / "tr.jsonl",
                            R"({"task_id": "x1", "language": "de", "variant": "mt", "level": 1, "query": "Frage?", "answer": "a", "file_name": "", "source_task_id": "ghost"})"
                            "\n");
    r = run_cli("--project " + (dir / "p").string() + " --mock ingest " + bench("english.jsonl") + " " +
                (dir / "tr.jsonl").string());
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("ghost"), std::string::npos);

    r = run_cli("--project " + dir.path().string() + " report nonsense");
    EXPECT_NE(r.status, 0);
    r = run_cli("--project " + dir.path().string() + " eval --variant robot");
    EXPECT_NE(r.status, 0);
}
