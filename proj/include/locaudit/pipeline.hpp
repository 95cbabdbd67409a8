#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "locaudit/eval_harness.hpp"
#include "locaudit/task_model.hpp"

namespace locaudit {

// Target languages the tool ships language profiles and checks for.
const std::vector<std::string>& supported_languages();

struct JudgeSettings {
    std::string model = "judge";
    int timeout_seconds = 60;
    std::size_t parallelism = 4;
    int attempts = 3;
};

struct ProjectConfig {
    std::filesystem::path project_dir;
    std::vector<std::string> languages;  // empty: every language in the store
    JudgeSettings judge;
    AgentAdapterConfig agent;
    std::string agent_model = "agent";
    bool mock = false;
    std::optional<std::filesystem::path> judge_script;
    std::optional<std::filesystem::path> agent_script;

    // Throws ValidationError: missing or unwritable project_dir, unsupported
    // language, bad limits.
    void validate() const;

    // Defaults overlaid with <project_dir>/locaudit.json when present.
    static ProjectConfig load(const std::filesystem::path& project_dir);
};

inline constexpr const char* kConfigFileName = "locaudit.json";

// Output of one command. ok=false means the summary reports errors and the
// process should exit nonzero.
struct CommandResult {
    std::string output;
    bool ok = true;
};

enum class ReportKind { edit_rates, flags, flips, eval_table };
std::string_view to_string(ReportKind k);
std::optional<ReportKind> parse_report_kind(std::string_view s);

// Every command opens the store in config.project_dir and throws Error on a
// fatal problem (bad input, missing prerequisite, unreachable endpoint).
CommandResult cmd_ingest(const ProjectConfig& config, const std::string& english_file,
                         const std::string& translated_file);
CommandResult cmd_check(const ProjectConfig& config);
CommandResult cmd_judge(const ProjectConfig& config);
// Claims and reviews every in_review task from a JSONL script, then meta-
// reviews with both roles. Offline stand-in for the review service.
CommandResult cmd_review_script(const ProjectConfig& config, const std::string& script_file);
CommandResult cmd_export(const ProjectConfig& config);
CommandResult cmd_eval(const ProjectConfig& config, Variant variant);
CommandResult cmd_report(const ProjectConfig& config, ReportKind kind);

// Blocks until stop is set. on_ready receives the bound port.
void cmd_serve(const ProjectConfig& config, int port, const std::optional<std::filesystem::path>& static_dir,
               const std::atomic<bool>& stop, const std::function<void(int)>& on_ready = {});

// Stable output names under the project directory.
std::filesystem::path export_path(const ProjectConfig& config, const std::string& language);
std::filesystem::path outcomes_path(const ProjectConfig& config, Variant variant, const std::string& language);
std::filesystem::path report_path(const ProjectConfig& config, ReportKind kind, const std::string& extension);

}  // namespace locaudit
