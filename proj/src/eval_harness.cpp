#include "locaudit/eval_harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "locaudit/error.hpp"
#include "locaudit/grading.hpp"
#include "locaudit/language_id.hpp"
#include "locaudit/metrics.hpp"
#include "locaudit/parallel.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

// --- wire records ---------------------------------------------------------

void AgentAdapterConfig::validate() const {
    if (manager_step_limit <= 0 || search_step_limit <= 0) throw ValidationError("step limits must be positive");
    if (timeout_seconds <= 0) throw ValidationError("timeout must be positive");
    if (parallelism == 0) throw ValidationError("parallelism must be positive");
}

nlohmann::ordered_json to_json(const AgentRequest& r) {
    nlohmann::ordered_json j;
    j["task_id"] = r.task_id;
    j["query"] = r.query;
    j["language"] = r.language;
    j["file_name"] = r.file_name;
    j["manager_step_limit"] = r.manager_step_limit;
    j["search_step_limit"] = r.search_step_limit;
    return j;
}

AgentRequest request_from_json(const nlohmann::json& j) {
    AgentRequest r;
    r.task_id = j.at("task_id").get<std::string>();
    r.query = j.at("query").get<std::string>();
    r.language = j.at("language").get<std::string>();
    r.file_name = j.value("file_name", "");
    r.manager_step_limit = j.value("manager_step_limit", 12);
    r.search_step_limit = j.value("search_step_limit", 20);
    return r;
}

nlohmann::ordered_json to_json(const AgentResponse& r) {
    nlohmann::ordered_json j;
    j["task_id"] = r.task_id;
    j["answer"] = r.answer;
    return j;
}

AgentResponse response_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("task_id") || !j["task_id"].is_string() || !j.contains("answer") ||
        !j["answer"].is_string()) {
        throw ValidationError("malformed agent response: " + j.dump());
    }
    return AgentResponse{j["task_id"].get<std::string>(), j["answer"].get<std::string>()};
}

nlohmann::ordered_json to_json(const EvalOutcome& o) {
    nlohmann::ordered_json j;
    j["task_id"] = o.task_id;
    j["variant"] = to_string(o.variant);
    j["language"] = o.language;
    j["model_id"] = o.model_id;
    j["prediction"] = o.prediction;
    j["correct"] = o.correct;
    j["error"] = o.error ? nlohmann::ordered_json(*o.error) : nlohmann::ordered_json(nullptr);
    return j;
}

EvalOutcome outcome_from_json(const nlohmann::json& j) {
    EvalOutcome o;
    o.task_id = j.at("task_id").get<std::string>();
    auto v = parse_variant(j.at("variant").get<std::string>());
    if (!v) throw ValidationError("bad variant in outcome " + j.dump());
    o.variant = *v;
    o.language = j.at("language").get<std::string>();
    o.model_id = j.at("model_id").get<std::string>();
    o.prediction = j.value("prediction", "");
    o.correct = j.at("correct").get<bool>();
    if (j.contains("error") && !j["error"].is_null()) o.error = j["error"].get<std::string>();
    if (o.correct && o.error) throw ValidationError("outcome " + o.task_id + " is correct but carries an error");
    return o;
}

// --- subprocess transport -------------------------------------------------

struct SubprocessAgentAdapter::Child {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string buffer;

    ~Child() {
        if (to_child >= 0) ::close(to_child);
        if (from_child >= 0) ::close(from_child);
        if (pid > 0) {
            // The shell may have forked the agent instead of exec'ing it.
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
        }
    }

    bool exited() {
        int status = 0;
        if (pid > 0 && ::waitpid(pid, &status, WNOHANG) == pid) {
            pid = -1;
            return true;
        }
        return pid <= 0;
    }
};

SubprocessAgentAdapter::SubprocessAgentAdapter(AgentAdapterConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.endpoint_or_command.empty()) throw ValidationError("subprocess adapter needs a command");
    // A child dying mid-request must surface as a write error, not kill us.
    ::signal(SIGPIPE, SIG_IGN);
}

SubprocessAgentAdapter::~SubprocessAgentAdapter() = default;

std::unique_ptr<SubprocessAgentAdapter::Child> SubprocessAgentAdapter::spawn() {
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw TransportError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw TransportError(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", config_.endpoint_or_command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    auto child = std::make_unique<Child>();
    child->pid = pid;
    child->to_child = in_pipe[1];
    child->from_child = out_pipe[0];
    return child;
}

std::unique_ptr<SubprocessAgentAdapter::Child> SubprocessAgentAdapter::acquire() {
    {
        std::lock_guard lock(mu_);
        while (!idle_.empty()) {
            auto child = std::move(idle_.back());
            idle_.pop_back();
            if (!child->exited()) return child;
        }
    }
    return spawn();
}

void SubprocessAgentAdapter::release(std::unique_ptr<Child> child) {
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(child));
}

void SubprocessAgentAdapter::probe() {
    auto child = spawn();
    // A shell that cannot run the command exits almost immediately.
    for (int i = 0; i < 10; ++i) {
        if (child->exited()) {
            throw TransportError("agent command exited at startup: " + config_.endpoint_or_command);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    release(std::move(child));
}

AgentResponse SubprocessAgentAdapter::solve(const AgentRequest& request) {
    auto child = acquire();
    const std::string line = to_json(request).dump() + "\n";
    for (std::size_t off = 0; off < line.size();) {
        const auto n = ::write(child->to_child, line.data() + off, line.size() - off);
        if (n <= 0) throw TransportError("agent process closed its input");
        off += static_cast<std::size_t>(n);
    }

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(config_.timeout_seconds);
    for (;;) {
        if (auto nl = child->buffer.find('\n'); nl != std::string::npos) {
            const std::string reply = child->buffer.substr(0, nl);
            child->buffer.erase(0, nl + 1);
            release(std::move(child));
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(reply);
            } catch (const nlohmann::json::parse_error&) {
                throw ValidationError("malformed agent response: " + reply);
            }
            return response_from_json(j);
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            throw TimeoutError("agent timed out after " + std::to_string(config_.timeout_seconds) + "s");
        }
        pollfd pfd{child->from_child, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno == EINTR) continue;
        if (ready == 0) continue;
        char buf[4096];
        const auto n = ::read(child->from_child, buf, sizeof buf);
        if (n <= 0) throw TransportError("agent process closed its output");
        child->buffer.append(buf, static_cast<std::size_t>(n));
    }
}

// --- scripted agent -------------------------------------------------------

ScriptedAgent::ScriptedAgent(std::map<std::pair<std::string, std::string>, Entry> script, bool check_language)
    : script_(std::move(script)), check_language_(check_language) {}

ScriptedAgent ScriptedAgent::from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open agent script " + path);
    std::map<std::pair<std::string, std::string>, Entry> script;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Entry e{j.value("answer", ""), j.value("timeout", false)};
            script[{j.at("language").get<std::string>(), j.at("task_id").get<std::string>()}] = std::move(e);
        } catch (const std::exception& e) {
            throw ParseError(lineno, "", path + ": " + e.what());
        }
    }
    return ScriptedAgent(std::move(script));
}

AgentResponse ScriptedAgent::solve(const AgentRequest& request) {
    auto it = script_.find({request.language, request.task_id});
    if (it != script_.end() && it->second.timeout) throw TimeoutError("scripted timeout");
    if (check_language_ && !text::trim(request.query).empty()) {
        if (identify_language(request.query).language != primary_language(request.language)) {
            return {request.task_id, kConfusedAnswer};
        }
    }
    return {request.task_id, it == script_.end() ? std::string(kConfusedAnswer) : it->second.answer};
}

std::unique_ptr<AgentAdapter> make_agent_adapter(const AgentAdapterConfig& config) {
    if (config.transport == AgentTransport::http) return std::make_unique<HttpAgentAdapter>(config);
    return std::make_unique<SubprocessAgentAdapter>(config);
}

// --- harness --------------------------------------------------------------

std::vector<EvalOutcome> run_eval(const Dataset& dataset, AgentAdapter& adapter, const std::string& model_id,
                                  const AgentAdapterConfig& config) {
    config.validate();
    if (dataset.records.empty()) throw ValidationError("cannot evaluate an empty dataset");
    adapter.probe();

    std::vector<EvalOutcome> outcomes(dataset.records.size());
    parallel_for(dataset.records.size(), config.parallelism, [&](std::size_t i) {
        const auto& task = dataset.records[i];
        auto& out = outcomes[i];
        out.task_id = task.task_id;
        out.variant = task.variant;
        out.language = task.language;
        out.model_id = model_id;
        try {
            const AgentRequest request{task.task_id, task.query, task.language, task.file_name,
                                       config.manager_step_limit, config.search_step_limit};
            const auto response = adapter.solve(request);
            if (response.task_id != task.task_id) {
                throw ValidationError("agent answered for task " + response.task_id);
            }
            out.prediction = response.answer;
            out.correct = grade(response.answer, task.answer);
        } catch (const TimeoutError& e) {
            out.error = std::string("timeout: ") + e.what();
        } catch (const TransportError& e) {
            out.error = std::string("transport: ") + e.what();
        } catch (const std::exception& e) {
            out.error = std::string("adapter: ") + e.what();
        }
        if (out.error) out.correct = false;
    });
    return outcomes;
}

std::vector<EvalOutcome> read_outcomes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open outcomes file " + path);
    std::vector<EvalOutcome> out;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(outcome_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(lineno, "", path + ": " + e.what());
        }
    }
    return out;
}

void write_outcomes_file(const std::string& path, const std::vector<EvalOutcome>& outcomes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write outcomes file " + path);
    for (const auto& o : outcomes) out << to_json(o).dump() << '\n';
}

// --- aggregation ----------------------------------------------------------

AccuracyTable aggregate(const std::vector<EvalOutcome>& outcomes) {
    AccuracyTable t;
    for (const auto& o : outcomes) {
        auto& cell = t.cells[{o.model_id, o.language, o.variant}];
        ++cell.total;
        if (o.correct) ++cell.correct;
    }
    return t;
}

std::optional<double> AccuracyTable::pass_at_1(const std::string& model, const std::string& language,
                                               Variant v) const {
    auto it = cells.find({model, language, v});
    if (it == cells.end() || it->second.total == 0) return std::nullopt;
    return it->second.pass_at_1();
}

std::optional<double> AccuracyTable::delta(const std::string& model, const std::string& language) const {
    auto mt = pass_at_1(model, language, Variant::mt);
    auto au = pass_at_1(model, language, Variant::audited);
    if (!mt || !au) return std::nullopt;
    return round1(*au - *mt);
}

std::vector<std::string> AccuracyTable::models() const {
    std::set<std::string> s;
    for (const auto& [k, _] : cells) s.insert(std::get<0>(k));
    return {s.begin(), s.end()};
}

std::vector<std::string> AccuracyTable::languages() const {
    std::set<std::string> s;
    for (const auto& [k, _] : cells) {
        if (std::get<2>(k) != Variant::english) s.insert(std::get<1>(k));
    }
    return {s.begin(), s.end()};
}

namespace {

std::string cell_text(std::optional<double> v, bool signed_delta = false) {
    if (!v) return "-";
    std::ostringstream out;
    if (signed_delta && *v >= 0) out << '+';
    out << std::fixed << std::setprecision(1) << round1(*v);
    return out.str();
}

}  // namespace

std::string AccuracyTable::render() const {
    const auto langs = languages();
    std::ostringstream out;
    out << std::left << std::setw(20) << "Model";
    for (const auto& l : langs) {
        out << std::right << std::setw(8) << (l + " MT") << std::setw(8) << "Audit" << std::setw(8) << "Delta";
    }
    out << std::setw(9) << "English" << "\n";
    for (const auto& m : models()) {
        out << std::left << std::setw(20) << m << std::right;
        for (const auto& l : langs) {
            out << std::setw(8) << cell_text(pass_at_1(m, l, Variant::mt)) << std::setw(8)
                << cell_text(pass_at_1(m, l, Variant::audited)) << std::setw(8) << cell_text(delta(m, l), true);
        }
        out << std::setw(9) << cell_text(pass_at_1(m, "en", Variant::english)) << "\n";
    }
    out << "\npass@1 accuracy [%]; '-' marks a variant that was not evaluated.\n";
    return out.str();
}

nlohmann::ordered_json AccuracyTable::to_json() const {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& [key, cell] : cells) {
        nlohmann::ordered_json j;
        j["model_id"] = std::get<0>(key);
        j["language"] = std::get<1>(key);
        j["variant"] = to_string(std::get<2>(key));
        j["correct"] = cell.correct;
        j["total"] = cell.total;
        j["pass_at_1"] = round1(cell.pass_at_1());
        rows.push_back(std::move(j));
    }
    auto deltas = nlohmann::ordered_json::array();
    for (const auto& m : models()) {
        for (const auto& l : languages()) {
            if (auto d = delta(m, l)) deltas.push_back({{"model_id", m}, {"language", l}, {"delta", *d}});
        }
    }
    return nlohmann::ordered_json{{"cells", rows}, {"deltas", deltas}};
}

}  // namespace locaudit
