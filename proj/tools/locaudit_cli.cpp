#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "locaudit/error.hpp"
#include "locaudit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace locaudit;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

int emit(const CommandResult& r) {
    std::cout << r.output;
    return r.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Localized benchmark audit pipeline"};
    app.require_subcommand(1);

    std::string project = ".";
    std::vector<std::string> languages;
    bool mock = false;
    std::string judge_script;
    std::string agent_script;
    std::string agent_command;
    std::string model;
    app.add_option("--project", project, "Project directory")->capture_default_str();
    app.add_option("--language", languages, "Restrict to these language tags");
    app.add_flag("--mock", mock, "Use scripted judge and agent instead of live endpoints");
    app.add_option("--judge-script", judge_script, "Scripted judge responses (JSONL, with --mock)");
    app.add_option("--agent-script", agent_script, "Scripted agent answers (JSONL, with --mock)");
    app.add_option("--agent-command", agent_command, "Agent subprocess command (JSONL over stdin/stdout)");
    app.add_option("--model", model, "Model id recorded with eval outcomes");

    auto* ingest = app.add_subcommand("ingest", "Load English and translated datasets");
    std::string english_file;
    std::string translated_file;
    ingest->add_option("english", english_file, "English JSONL")->required()->check(CLI::ExistingFile);
    ingest->add_option("translated", translated_file, "Translated JSONL")->required()->check(CLI::ExistingFile);

    app.add_subcommand("check", "Run deterministic filters");
    app.add_subcommand("judge", "Run judge axes on checked tasks");

    auto* serve = app.add_subcommand("serve", "Serve the review API");
    int port = 8080;
    std::string static_dir;
    serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--static", static_dir, "Directory with review UI assets");

    auto* review = app.add_subcommand("review-script", "Apply scripted reviews and approvals");
    std::string review_file;
    review->add_option("script", review_file, "Review script JSONL")->required()->check(CLI::ExistingFile);

    app.add_subcommand("export", "Write audited datasets");

    auto* eval = app.add_subcommand("eval", "Run the agent on one dataset variant");
    std::string variant_name;
    eval->add_option("--variant", variant_name, "english, mt or audited")
        ->required()
        ->check(CLI::IsMember({"english", "mt", "audited"}));

    auto* report = app.add_subcommand("report", "Render a report");
    std::string report_name;
    report->add_option("kind", report_name, "edit-rates, flags, flips or eval-table")
        ->required()
        ->check(CLI::IsMember({"edit-rates", "flags", "flips", "eval-table"}));

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path dir(project);
        if (ingest->parsed()) fs::create_directories(dir);
        auto config = ProjectConfig::load(dir);
        if (!languages.empty()) config.languages = languages;
        config.mock = mock;
        if (!judge_script.empty()) config.judge_script = judge_script;
        if (!agent_script.empty()) config.agent_script = agent_script;
        if (!agent_command.empty()) {
            config.agent.transport = AgentTransport::subprocess;
            config.agent.endpoint_or_command = agent_command;
        }
        if (!model.empty()) config.agent_model = model;

        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "ingest") return emit(cmd_ingest(config, english_file, translated_file));
        if (name == "check") return emit(cmd_check(config));
        if (name == "judge") return emit(cmd_judge(config));
        if (name == "review-script") return emit(cmd_review_script(config, review_file));
        if (name == "export") return emit(cmd_export(config));
        if (name == "eval") return emit(cmd_eval(config, *parse_variant(variant_name)));
        if (name == "report") return emit(cmd_report(config, *parse_report_kind(report_name)));
        if (name == "serve") {
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::optional<fs::path> assets;
            if (!static_dir.empty()) assets = static_dir;
            cmd_serve(config, port, assets, g_stop, [](int bound) {
                std::cout << "listening on http://127.0.0.1:" << bound << std::endl;
            });
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
