#include "locaudit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "locaudit/audit_store.hpp"
#include "locaudit/error.hpp"
#include "locaudit/filters.hpp"
#include "locaudit/judges.hpp"
#include "locaudit/metrics.hpp"
#include "locaudit/review_api.hpp"

namespace locaudit {

namespace fs = std::filesystem;

namespace {

constexpr const char* kScriptReviewer = "script-reviewer";
constexpr const char* kScriptLinguist = "script-linguist";
constexpr const char* kScriptResearcher = "script-researcher";

std::string format_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out << text;
        if (!out.flush()) throw Error("cannot write " + path.string());
    }
    fs::rename(tmp, path);
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::ordered_json>& rows) {
    std::string text;
    for (const auto& r : rows) text += r.dump() + "\n";
    write_text(path, text);
}

AuditStore open_store(const ProjectConfig& config) {
    config.validate();
    return AuditStore::open(config.project_dir);
}

bool wanted(const ProjectConfig& config, const std::string& language) {
    if (config.languages.empty()) return true;
    const auto lang = primary_language(language);
    return std::any_of(config.languages.begin(), config.languages.end(),
                       [&](const std::string& l) { return primary_language(l) == lang; });
}

std::set<std::string> store_languages(const ProjectConfig& config, const StoreState& state) {
    std::set<std::string> out;
    for (const auto& [key, entry] : state.tasks) {
        if (wanted(config, key.language)) out.insert(key.language);
    }
    return out;
}

Dataset read_input(const std::string& path) {
    try {
        return read_dataset_file(path);
    } catch (const ParseError& e) {
        throw ParseError(0, "", path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::unique_ptr<CompletionClient> make_judge_client(const ProjectConfig& config) {
    if (config.mock) {
        auto script = config.judge_script;
        if (!script && fs::exists(config.project_dir / "mock" / "judge.jsonl")) {
            script = config.project_dir / "mock" / "judge.jsonl";
        }
        if (script) return std::make_unique<ScriptedCompletionClient>(ScriptedCompletionClient::from_jsonl(*script));
        return std::make_unique<ScriptedCompletionClient>();
    }
    return HttpCompletionClient::from_environment(config.judge.model);
}

std::unique_ptr<AgentAdapter> make_agent(const ProjectConfig& config) {
    if (config.mock) {
        auto script = config.agent_script;
        if (!script && fs::exists(config.project_dir / "mock" / "agent.jsonl")) {
            script = config.project_dir / "mock" / "agent.jsonl";
        }
        if (!script) {
            throw ValidationError("--mock eval needs --agent-script or " +
                                  (config.project_dir / "mock" / "agent.jsonl").string());
        }
        return std::make_unique<ScriptedAgent>(ScriptedAgent::from_jsonl(*script));
    }
    auto agent = config.agent;
    if (agent.endpoint_or_command.empty()) {
        const char* endpoint = std::getenv("AGENT_ENDPOINT");
        if (!endpoint || !*endpoint) {
            throw ValidationError("no agent configured: set AGENT_ENDPOINT, an agent command, or use --mock");
        }
        agent.transport = AgentTransport::http;
        agent.endpoint_or_command = endpoint;
    }
    return make_agent_adapter(agent);
}

std::string agent_model(const ProjectConfig& config) { return config.mock ? "mock-agent" : config.agent_model; }

std::vector<EvalOutcome> read_outcomes_if_present(const fs::path& path) {
    if (!fs::exists(path)) return {};
    return read_outcomes_file(path.string());
}

}  // namespace

const std::vector<std::string>& supported_languages() {
    static const std::vector<std::string> langs{"ar", "de", "hi", "ko", "pt"};
    return langs;
}

void ProjectConfig::validate() const {
    if (project_dir.empty()) throw ValidationError("project directory is required");
    if (!fs::is_directory(project_dir)) throw ValidationError("project directory does not exist: " + project_dir.string());
    if (::access(project_dir.c_str(), W_OK) != 0) {
        throw ValidationError("project directory is not writable: " + project_dir.string());
    }
    const auto& supported = supported_languages();
    for (const auto& l : languages) {
        if (std::find(supported.begin(), supported.end(), primary_language(l)) == supported.end()) {
            throw ValidationError("unsupported language " + l);
        }
    }
    if (judge.parallelism == 0) throw ValidationError("judge parallelism must be positive");
    if (judge.attempts <= 0) throw ValidationError("judge attempts must be positive");
    if (judge.timeout_seconds <= 0) throw ValidationError("judge timeout must be positive");
    agent.validate();
}

ProjectConfig ProjectConfig::load(const fs::path& project_dir) {
    ProjectConfig c;
    c.project_dir = project_dir;
    const auto path = project_dir / kConfigFileName;
    if (!fs::exists(path)) return c;

    std::ifstream in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    try {
        if (j.contains("languages")) c.languages = j.at("languages").get<std::vector<std::string>>();
        if (j.contains("judge")) {
            const auto& jj = j.at("judge");
            c.judge.model = jj.value("model", c.judge.model);
            c.judge.timeout_seconds = jj.value("timeout_seconds", c.judge.timeout_seconds);
            c.judge.parallelism = jj.value("parallelism", c.judge.parallelism);
            c.judge.attempts = jj.value("attempts", c.judge.attempts);
        }
        if (j.contains("agent")) {
            const auto& ja = j.at("agent");
            if (ja.contains("command")) {
                c.agent.transport = AgentTransport::subprocess;
                c.agent.endpoint_or_command = ja.at("command").get<std::string>();
            } else if (ja.contains("endpoint")) {
                c.agent.transport = AgentTransport::http;
                c.agent.endpoint_or_command = ja.at("endpoint").get<std::string>();
            }
            c.agent_model = ja.value("model", c.agent_model);
            c.agent.manager_step_limit = ja.value("manager_step_limit", c.agent.manager_step_limit);
            c.agent.search_step_limit = ja.value("search_step_limit", c.agent.search_step_limit);
            c.agent.timeout_seconds = ja.value("timeout_seconds", c.agent.timeout_seconds);
            c.agent.parallelism = ja.value("parallelism", c.agent.parallelism);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return c;
}

std::string_view to_string(ReportKind k) {
    switch (k) {
        case ReportKind::edit_rates: return "edit-rates";
        case ReportKind::flags: return "flags";
        case ReportKind::flips: return "flips";
        case ReportKind::eval_table: return "eval-table";
    }
    return "?";
}

std::optional<ReportKind> parse_report_kind(std::string_view s) {
    for (auto k : {ReportKind::edit_rates, ReportKind::flags, ReportKind::flips, ReportKind::eval_table}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

fs::path export_path(const ProjectConfig& config, const std::string& language) {
    return config.project_dir / ("export." + language + ".jsonl");
}

fs::path outcomes_path(const ProjectConfig& config, Variant variant, const std::string& language) {
    return config.project_dir / ("outcomes." + std::string(to_string(variant)) + "." + language + ".jsonl");
}

fs::path report_path(const ProjectConfig& config, ReportKind kind, const std::string& extension) {
    return config.project_dir / ("report." + std::string(to_string(kind)) + "." + extension);
}

CommandResult cmd_ingest(const ProjectConfig& config, const std::string& english_file,
                         const std::string& translated_file) {
    auto store = open_store(config);
    const auto english = read_input(english_file);
    auto translated = read_input(translated_file);
    std::erase_if(translated.records, [&](const TaskRecord& r) { return !wanted(config, r.language); });
    for (const auto& r : translated.records) {
        if (r.variant == Variant::english) {
            throw ValidationError(translated_file + ": task " + r.task_id + " is an English record");
        }
    }
    const auto pairs = pair_variants(english, translated);
    store.ingest(pairs);

    std::map<std::string, std::size_t> per_language;
    for (const auto& p : pairs) ++per_language[p.target.language];
    std::ostringstream out;
    out << pairs.size() << " tasks ingested\n";
    for (const auto& [lang, n] : per_language) out << "  " << lang << ": " << n << "\n";
    return {out.str(), true};
}

CommandResult cmd_check(const ProjectConfig& config) {
    auto store = open_store(config);
    const auto state = store.snapshot();

    std::map<FilterCheck, std::size_t> failed;
    std::vector<nlohmann::ordered_json> rows;
    std::size_t checked = 0;
    for (const auto& [key, entry] : state.tasks) {
        if (!wanted(config, key.language)) continue;
        // Recomputed for every task so reruns print the same summary; only
        // tasks still waiting for findings get them attached.
        auto findings = run_filters(entry.pair);
        for (const auto& f : findings) {
            if (!f.passed) ++failed[f.check];
        }
        nlohmann::ordered_json row;
        row["task_id"] = key.task_id;
        row["language"] = key.language;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& f : findings) arr.push_back(to_json(f));
        row["findings"] = std::move(arr);
        rows.push_back(std::move(row));
        if (entry.state == AuditState::ingested) store.attach_filter_findings(key, std::move(findings));
        ++checked;
    }
    if (checked == 0) throw StateError("no ingested tasks; run ingest first");
    write_jsonl(config.project_dir / "checks.jsonl", rows);

    std::ostringstream out;
    out << checked << " tasks checked\n";
    if (failed.empty()) {
        out << "0 failures\n";
    } else {
        bool first = true;
        for (const auto& [check, n] : failed) {
            out << (first ? "" : ", ") << to_string(check) << ": " << n << " failed";
            first = false;
        }
        out << "\n";
    }
    return {out.str(), true};
}

CommandResult cmd_judge(const ProjectConfig& config) {
    auto store = open_store(config);
    const auto state = store.snapshot();
    auto client = make_judge_client(config);
    JudgeCache cache(config.project_dir / "judge-cache");
    JudgeOptions options;
    options.cache = &cache;
    options.parallelism = config.judge.parallelism;
    options.transport_attempts = config.judge.attempts;

    std::vector<nlohmann::ordered_json> rows;
    std::size_t verdicts = 0;
    std::size_t failed = 0;
    std::size_t pending = 0;
    for (const auto& [key, entry] : state.tasks) {
        if (!wanted(config, key.language)) continue;
        if (!entry.findings_attached) {
            ++pending;
            continue;
        }
        auto result = run_judges(entry.pair, *client, options);
        verdicts += result.size();
        nlohmann::ordered_json row;
        row["task_id"] = key.task_id;
        row["language"] = key.language;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& v : result) {
            if (!v.passed) ++failed;
            arr.push_back(to_json(v));
        }
        row["verdicts"] = std::move(arr);
        rows.push_back(std::move(row));
        if (entry.state == AuditState::checked) store.attach_verdicts(key, std::move(result));
    }
    if (rows.empty()) throw StateError("no checked tasks; run check first");
    write_jsonl(config.project_dir / "verdicts.jsonl", rows);

    std::ostringstream out;
    out << verdicts << " verdicts, " << failed << " failed\n";
    const auto lookups = cache.hits() + cache.misses();
    out << "cache hits: " << (lookups == 0 ? "0.0" : format_percent(100.0 * cache.hits() / lookups)) << "%\n";
    if (pending > 0) out << pending << " tasks not yet checked; run check first\n";
    return {out.str(), pending == 0};
}

CommandResult cmd_review_script(const ProjectConfig& config, const std::string& script_file) {
    auto store = open_store(config);
    std::ifstream in(script_file);
    if (!in) throw Error("cannot read " + script_file);

    std::map<TaskKey, nlohmann::json> script;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TaskKey key{j.at("language").get<std::string>(), j.at("task_id").get<std::string>()};
            script[key] = std::move(j);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, "", script_file + ": " + e.what());
        }
    }

    std::size_t reviewed = 0;
    std::size_t approved = 0;
    std::size_t flagged = 0;
    std::vector<std::string> langs;
    for (const auto& l : store_languages(config, store.snapshot())) langs.push_back(l);
    for (const auto& lang : langs) {
        while (true) {
            const auto waiting = store.list(lang, AuditState::in_review).size() + store.list(lang, AuditState::returned).size();
            if (waiting == 0) break;
            const auto claim = store.next_task(kScriptReviewer, lang);
            const TaskKey key{claim.task.language, claim.task.task_id};

            nlohmann::json d;
            d["task_id"] = key.task_id;
            d["language"] = key.language;
            d["reviewer_id"] = kScriptReviewer;
            d["edited_query"] = claim.task.query;
            d["edited_answer"] = claim.task.answer;
            d["note"] = "";
            nlohmann::json flags;
            for (auto c : kIssueCategories) flags[std::string(to_string(c))] = false;
            if (auto it = script.find(key); it != script.end()) {
                const auto& s = it->second;
                if (s.contains("flags")) {
                    for (const auto& [name, value] : s.at("flags").items()) flags[name] = value;
                }
                for (const char* field : {"edited_query", "edited_answer", "note"}) {
                    if (s.contains(field)) d[field] = s.at(field);
                }
            }
            d["flags"] = flags;
            auto decision = decision_from_json(d);
            if (decision.any_flag()) ++flagged;
            store.submit_review(std::move(decision));
            ++reviewed;

            AuditState st = AuditState::meta_pending;
            for (const auto& [who, role] : {std::pair{kScriptLinguist, MetaRole::linguist},
                                            std::pair{kScriptResearcher, MetaRole::researcher}}) {
                MetaReview m;
                m.task_id = key.task_id;
                m.language = key.language;
                m.reviewer_id = who;
                m.role = role;
                m.approve = true;
                st = store.submit_meta_review(std::move(m));
            }
            if (st == AuditState::approved) ++approved;
        }
    }

    std::ostringstream out;
    if (reviewed == 0) {
        out << "no tasks awaiting review\n";
    } else {
        out << reviewed << " reviews submitted (" << flagged << " flagged), " << approved << " approved\n";
    }
    return {out.str(), true};
}

CommandResult cmd_export(const ProjectConfig& config) {
    auto store = open_store(config);
    const auto langs = store_languages(config, store.snapshot());
    if (langs.empty()) throw StateError("no ingested tasks; run ingest first");
    std::ostringstream out;
    for (const auto& lang : langs) {
        const auto d = store.export_audited(lang);
        std::string text;
        for (const auto& l : serialize_dataset(d)) text += l + "\n";
        write_text(export_path(config, lang), text);
        nlohmann::ordered_json meta{{"name", d.metadata.name}, {"created", d.metadata.created},
                                    {"provenance", d.metadata.provenance}};
        write_text(config.project_dir / ("export." + lang + ".meta.json"), meta.dump(2) + "\n");
        out << lang << ": " << d.metadata.provenance << " -> " << export_path(config, lang).filename().string()
            << "\n";
    }
    return {out.str(), true};
}

CommandResult cmd_eval(const ProjectConfig& config, Variant variant) {
    auto store = open_store(config);
    const auto state = store.snapshot();
    std::map<std::string, Dataset> datasets;
    if (variant == Variant::english) {
        Dataset d;
        d.metadata.name = "english";
        for (const auto& [id, r] : state.english) d.records.push_back(r);
        if (!d.records.empty()) datasets["en"] = std::move(d);
    } else {
        for (const auto& lang : store_languages(config, state)) {
            if (variant == Variant::mt) {
                Dataset d;
                d.metadata.name = "mt." + lang;
                for (const auto& [key, entry] : state.tasks) {
                    if (key.language == lang) d.records.push_back(entry.pair.target);
                }
                datasets[lang] = std::move(d);
            } else {
                const auto path = export_path(config, lang);
                if (!fs::exists(path)) throw StateError("missing " + path.filename().string() + "; run export first");
                auto d = read_dataset_file(path.string());
                if (d.records.empty()) throw StateError(path.filename().string() + " has no approved tasks");
                datasets[lang] = std::move(d);
            }
        }
    }
    if (datasets.empty()) throw StateError("no tasks to evaluate; run ingest first");

    auto adapter = make_agent(config);
    const auto model = agent_model(config);
    std::ostringstream out;
    bool ok = true;
    for (const auto& [lang, d] : datasets) {
        const auto outcomes = run_eval(d, *adapter, model, config.agent);
        std::vector<nlohmann::ordered_json> rows;
        std::size_t correct = 0;
        std::size_t errors = 0;
        for (const auto& o : outcomes) {
            correct += o.correct ? 1 : 0;
            errors += o.error ? 1 : 0;
        }
        write_outcomes_file(outcomes_path(config, variant, lang).string(), outcomes);
        out << to_string(variant) << " " << lang << ": " << correct << "/" << outcomes.size() << " correct ("
            << format_percent(round1(100.0 * correct / outcomes.size())) << ")";
        if (errors > 0) {
            out << ", " << errors << " errors";
            ok = false;
        }
        out << "\n";
    }
    return {out.str(), ok};
}

CommandResult cmd_report(const ProjectConfig& config, ReportKind kind) {
    auto store = open_store(config);
    const auto state = store.snapshot();
    const auto langs = store_languages(config, state);
    std::string text;
    std::vector<nlohmann::ordered_json> rows;
    std::string note;

    switch (kind) {
        case ReportKind::edit_rates: {
            Dataset mt;
            Dataset audited;
            for (const auto& lang : langs) {
                const auto path = export_path(config, lang);
                if (!fs::exists(path)) throw StateError("missing " + path.filename().string() + "; run export first");
                auto d = read_dataset_file(path.string());
                std::set<std::string> ids;
                for (auto& r : d.records) {
                    ids.insert(r.task_id);
                    audited.records.push_back(std::move(r));
                }
                std::size_t skipped = 0;
                for (const auto& [key, entry] : state.tasks) {
                    if (key.language != lang) continue;
                    if (ids.count(key.task_id)) {
                        mt.records.push_back(entry.pair.target);
                    } else {
                        ++skipped;
                    }
                }
                if (skipped > 0) note += lang + ": " + std::to_string(skipped) + " tasks without approved audit excluded\n";
            }
            if (audited.records.empty()) throw StateError("no approved tasks exported; run export first");
            const auto reports = edit_rates(mt, audited);
            text = render_edit_rates(reports);
            for (const auto& r : reports) rows.push_back(to_json(r));
            break;
        }
        case ReportKind::flags: {
            std::vector<ReviewDecision> decisions;
            for (const auto& [key, entry] : state.tasks) {
                if (wanted(config, key.language) && entry.current_decision()) {
                    decisions.push_back(*entry.current_decision());
                }
            }
            if (decisions.empty()) throw StateError("no review decisions; run serve or review-script first");
            const auto rates = flag_rates(decisions);
            text = render_flag_rates(rates, decisions.size());
            for (const auto& [c, r] : rates) rows.push_back({{"category", to_string(c)}, {"flag_rate", r}});
            break;
        }
        case ReportKind::flips: {
            std::vector<EvalOutcome> mt;
            std::vector<EvalOutcome> audited;
            for (const auto& lang : langs) {
                const auto mp = outcomes_path(config, Variant::mt, lang);
                const auto ap = outcomes_path(config, Variant::audited, lang);
                if (!fs::exists(mp) || !fs::exists(ap)) {
                    throw StateError("missing eval outcomes for " + lang + "; run eval on both variants first");
                }
                for (auto& o : read_outcomes_file(mp.string())) mt.push_back(std::move(o));
                for (auto& o : read_outcomes_file(ap.string())) audited.push_back(std::move(o));
            }
            if (langs.empty()) throw StateError("run eval on both variants first");
            std::set<TaskKey> evaluated;
            for (const auto& o : audited) evaluated.insert({o.language, o.task_id});
            std::vector<ReviewDecision> decisions;
            for (const auto& [key, entry] : state.tasks) {
                if (wanted(config, key.language) && entry.current_decision() && evaluated.count(key)) {
                    decisions.push_back(*entry.current_decision());
                }
            }
            if (decisions.empty()) throw StateError("no reviewed tasks with eval outcomes");
            const auto report = flip_rates(decisions, mt, audited);
            text = render_flip_report(report);
            rows.push_back(to_json(report));
            break;
        }
        case ReportKind::eval_table: {
            std::vector<EvalOutcome> all;
            for (auto& o : read_outcomes_if_present(outcomes_path(config, Variant::english, "en"))) all.push_back(std::move(o));
            for (const auto& lang : langs) {
                for (auto v : {Variant::mt, Variant::audited}) {
                    for (auto& o : read_outcomes_if_present(outcomes_path(config, v, lang))) all.push_back(std::move(o));
                }
            }
            if (all.empty()) throw StateError("no eval outcomes; run eval first");
            const auto table = aggregate(all);
            text = table.render();
            rows.push_back(table.to_json());
            break;
        }
    }

    text += note;
    write_text(report_path(config, kind, "txt"), text);
    write_jsonl(report_path(config, kind, "jsonl"), rows);
    return {text, true};
}

void cmd_serve(const ProjectConfig& config, int port, const std::optional<fs::path>& static_dir,
               const std::atomic<bool>& stop, const std::function<void(int)>& on_ready) {
    auto store = open_store(config);
    ReviewServer server(store, static_dir);
    const int bound = server.bind("127.0.0.1", port);
    std::thread listener([&] { server.listen(); });
    server.wait_until_ready();
    if (on_ready) on_ready(bound);
    while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
    listener.join();
}

}  // namespace locaudit
