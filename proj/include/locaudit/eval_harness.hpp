#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "locaudit/eval_types.hpp"
#include "locaudit/task_model.hpp"

namespace locaudit {

enum class AgentTransport { subprocess, http };

struct AgentAdapterConfig {
    AgentTransport transport = AgentTransport::subprocess;
    std::string endpoint_or_command;
    int manager_step_limit = 12;
    int search_step_limit = 20;
    int timeout_seconds = 600;
    std::size_t parallelism = 4;

    // Throws ValidationError when a limit or the timeout is not positive.
    void validate() const;
};

struct AgentRequest {
    std::string task_id;
    std::string query;
    std::string language;
    std::string file_name;
    int manager_step_limit = 12;
    int search_step_limit = 20;
};

struct AgentResponse {
    std::string task_id;
    std::string answer;
};

nlohmann::ordered_json to_json(const AgentRequest& r);
AgentRequest request_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AgentResponse& r);
// Throws ValidationError on a malformed response record.
AgentResponse response_from_json(const nlohmann::json& j);

class AgentAdapter {
public:
    virtual ~AgentAdapter() = default;
    // Throws TransportError when the agent cannot be reached at all.
    virtual void probe() = 0;
    // Throws TimeoutError, TransportError, or ValidationError (malformed reply).
    virtual AgentResponse solve(const AgentRequest& request) = 0;
};

// Long-lived child processes speaking one JSON request/response per line on
// stdin/stdout. Up to `parallelism` children run at once; a child that times
// out is killed and replaced on demand.
class SubprocessAgentAdapter : public AgentAdapter {
public:
    explicit SubprocessAgentAdapter(AgentAdapterConfig config);
    ~SubprocessAgentAdapter() override;

    void probe() override;
    AgentResponse solve(const AgentRequest& request) override;

private:
    struct Child;
    std::unique_ptr<Child> spawn();
    std::unique_ptr<Child> acquire();
    void release(std::unique_ptr<Child> child);

    AgentAdapterConfig config_;
    std::mutex mu_;
    std::vector<std::unique_ptr<Child>> idle_;
};

// POSTs each request to endpoint_or_command (http://host:port/path).
class HttpAgentAdapter : public AgentAdapter {
public:
    explicit HttpAgentAdapter(AgentAdapterConfig config);

    void probe() override;
    AgentResponse solve(const AgentRequest& request) override;

private:
    AgentAdapterConfig config_;
    std::string base_;
    std::string path_;
};

// Offline agent used by --mock runs. Answers come from a script keyed by
// (language, task_id). When the query is not in the requested language the
// agent is "confused" and answers kConfusedAnswer.
class ScriptedAgent : public AgentAdapter {
public:
    static constexpr const char* kConfusedAnswer = "unknown";

    struct Entry {
        std::string answer;
        bool timeout = false;
    };

    explicit ScriptedAgent(std::map<std::pair<std::string, std::string>, Entry> script = {},
                           bool check_language = true);
    // JSONL lines {"language", "task_id", "answer"} or {..., "timeout": true}.
    static ScriptedAgent from_jsonl(const std::string& path);

    void probe() override {}
    AgentResponse solve(const AgentRequest& request) override;

private:
    std::map<std::pair<std::string, std::string>, Entry> script_;
    bool check_language_;
};

std::unique_ptr<AgentAdapter> make_agent_adapter(const AgentAdapterConfig& config);

// One outcome per task in dataset order; the agent is asked once per task.
// Adapter failures become incorrect outcomes with an error note. Throws
// TransportError only if the adapter's probe fails, before any task runs.
std::vector<EvalOutcome> run_eval(const Dataset& dataset, AgentAdapter& adapter, const std::string& model_id,
                                  const AgentAdapterConfig& config);

std::vector<EvalOutcome> read_outcomes_file(const std::string& path);
void write_outcomes_file(const std::string& path, const std::vector<EvalOutcome>& outcomes);

struct AccuracyCell {
    std::size_t correct = 0;
    std::size_t total = 0;
    // Unrounded 100 * correct / total.
    double pass_at_1() const { return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / total; }
};

struct AccuracyTable {
    // (model, language, variant) -> cell. Missing keys are absent cells.
    std::map<std::tuple<std::string, std::string, Variant>, AccuracyCell> cells;

    std::optional<double> pass_at_1(const std::string& model, const std::string& language, Variant v) const;
    // Audit minus MT, from unrounded rates, rounded to one decimal.
    std::optional<double> delta(const std::string& model, const std::string& language) const;
    std::vector<std::string> models() const;
    std::vector<std::string> languages() const;  // non-English, sorted

    std::string render() const;
    nlohmann::ordered_json to_json() const;
};

AccuracyTable aggregate(const std::vector<EvalOutcome>& outcomes);

}  // namespace locaudit
