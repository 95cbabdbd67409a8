#include "locaudit/judges.hpp"

#include <fstream>
#include <sstream>

#include "locaudit/hash.hpp"
#include "locaudit/parallel.hpp"
#include "locaudit/text.hpp"

namespace locaudit {

namespace {

std::string language_name(std::string_view tag) {
    const auto primary = primary_language(tag);
    if (tag == "pt-BR") return "Brazilian Portuguese";
    static const std::map<std::string, std::string, std::less<>> names = {
        {"en", "English"}, {"de", "German"}, {"pt", "Portuguese"},
        {"ar", "Arabic"},  {"hi", "Hindi"},  {"ko", "Korean"},
    };
    auto it = names.find(primary);
    return it != names.end() ? it->second : std::string(tag);
}

void block(std::ostringstream& out, std::string_view label, std::string_view body) {
    out << label << ":\n<<<\n" << body << "\n>>>\n\n";
}

std::string ascii_lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::optional<bool> verdict_token(const std::string& line, std::string& rest) {
    const auto space = line.find_first_of(" \t");
    std::string token = line.substr(0, space);
    rest = space == std::string::npos ? "" : text::trim(line.substr(space));
    const auto first = token.find_first_not_of("*_`\"'[(");
    const auto last = token.find_last_not_of("*_`\"'.,:;!)]");
    token = first == std::string::npos || last < first ? "" : token.substr(first, last - first + 1);
    token = ascii_lower(token);
    if (token == "pass") return true;
    if (token == "fail") return false;
    return std::nullopt;
}

}  // namespace

std::string_view to_string(JudgeAxis a) {
    switch (a) {
        case JudgeAxis::fluency: return "fluency";
        case JudgeAxis::adequacy: return "adequacy";
        case JudgeAxis::qa_compatibility: return "qa_compatibility";
        case JudgeAxis::cultural_appropriateness: return "cultural_appropriateness";
    }
    return "fluency";
}

std::optional<JudgeAxis> parse_judge_axis(std::string_view s) {
    for (auto a : kJudgeAxes) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

IssueCategory category_for(JudgeAxis a) {
    switch (a) {
        case JudgeAxis::fluency: return IssueCategory::fluency;
        case JudgeAxis::adequacy: return IssueCategory::adequacy;
        case JudgeAxis::qa_compatibility: return IssueCategory::functional_alignment;
        case JudgeAxis::cultural_appropriateness: return IssueCategory::cultural_alignment;
    }
    return IssueCategory::fluency;
}

nlohmann::ordered_json to_json(const JudgeVerdict& v) {
    nlohmann::ordered_json j;
    j["axis"] = to_string(v.axis);
    j["category"] = to_string(category_for(v.axis));
    j["passed"] = v.passed;
    j["rationale"] = v.rationale;
    j["model_id"] = v.model_id;
    return j;
}

JudgeVerdict verdict_from_json(const nlohmann::json& j) {
    auto axis = parse_judge_axis(j.at("axis").get<std::string>());
    if (!axis) throw ValidationError("bad judge axis in " + j.dump());
    JudgeVerdict v;
    v.axis = *axis;
    v.passed = j.at("passed").get<bool>();
    v.rationale = j.value("rationale", "");
    v.model_id = j.value("model_id", "");
    return v;
}

// --- prompts --------------------------------------------------------------

std::string build_judge_prompt(JudgeAxis axis, const TaskPair& pair) {
    const auto target_lang = language_name(pair.target.language);
    std::ostringstream out;
    out << "Axis: " << to_string(axis) << "\n\n";
    switch (axis) {
        case JudgeAxis::fluency:
            out << "The text below is a task for an AI assistant, written in " << target_lang << ".\n"
                << "Does it read as natural, idiomatic " << target_lang
                << " with a register suitable for a user addressing an assistant? "
                << "Ignore whether the content is correct.\n\n";
            block(out, "Text", pair.target.query);
            break;
        case JudgeAxis::adequacy:
            out << "Below is an English task and its " << target_lang << " translation.\n"
                << "Does the translation carry the same meaning, adding nothing and leaving nothing out?\n\n";
            block(out, "English", pair.source.query);
            block(out, "Translation", pair.target.query);
            break;
        case JudgeAxis::qa_compatibility:
            out << "Below is a translated task with its expected answer, plus the answer of the English original.\n"
                << "Would a correct response to the translated task match the expected answer under exact "
                << "string matching? Codes, identifiers, notation and requested formats must fit the task as "
                << "translated.\n\n";
            block(out, "Task", pair.target.query);
            block(out, "Expected answer", pair.target.answer);
            block(out, "English answer", pair.source.answer);
            break;
        case JudgeAxis::cultural_appropriateness:
            out << "The task below targets speakers of " << target_lang << " (" << pair.target.language << ").\n"
                << "Are its references, units, formats and assumptions appropriate for that locale?\n\n";
            block(out, "Task", pair.target.query);
            break;
    }
    out << "Reply with exactly PASS or FAIL on the first line and one short reason on the second line.";
    return out.str();
}

// --- verdict parsing ------------------------------------------------------

JudgeVerdict parse_verdict(const std::string& raw, JudgeAxis axis) {
    std::vector<std::string> lines;
    std::istringstream in(raw);
    for (std::string line; std::getline(in, line);) {
        auto t = text::trim(line);
        if (!t.empty()) lines.push_back(std::move(t));
    }
    if (lines.empty()) throw VerdictParseError(raw, "empty judge reply");

    const std::size_t n = lines.size();
    for (std::size_t back = 1; back <= std::min<std::size_t>(2, n); ++back) {
        const std::size_t idx = n - back;
        std::string rest;
        if (auto passed = verdict_token(lines[idx], rest)) {
            for (std::size_t i = idx + 1; i < n; ++i) rest += (rest.empty() ? "" : " ") + lines[i];
            return JudgeVerdict{axis, *passed, rest, "", false};
        }
    }
    throw VerdictParseError(raw, "judge reply has no PASS/FAIL verdict: " + raw);
}

// --- scripted client ------------------------------------------------------

ScriptedCompletionClient::ScriptedCompletionClient(std::vector<Rule> rules, std::string model_id,
                                                   std::string default_response)
    : rules_(std::move(rules)),
      cursor_(rules_.size(), 0),
      model_id_(std::move(model_id)),
      default_response_(std::move(default_response)) {}

ScriptedCompletionClient ScriptedCompletionClient::from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open judge script " + path);
    std::vector<Rule> rules;
    std::string model = "scripted-judge";
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (j.contains("model_id")) {
                model = j["model_id"].get<std::string>();
                continue;
            }
            Rule r;
            if (j.contains("axis")) {
                r.axis = parse_judge_axis(j["axis"].get<std::string>());
                if (!r.axis) throw Error("unknown axis");
            }
            r.contains = j.value("contains", "");
            if (j.contains("responses")) {
                r.responses = j["responses"].get<std::vector<std::string>>();
            } else {
                r.responses.push_back(j.at("response").get<std::string>());
            }
            if (r.responses.empty()) throw Error("rule without responses");
            rules.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError(lineno, "", path + ": " + e.what());
        }
    }
    return ScriptedCompletionClient(std::move(rules), model);
}

ScriptedCompletionClient::ScriptedCompletionClient(ScriptedCompletionClient&& other) noexcept {
    std::lock_guard lock(other.mu_);
    rules_ = std::move(other.rules_);
    cursor_ = std::move(other.cursor_);
    model_id_ = std::move(other.model_id_);
    default_response_ = std::move(other.default_response_);
    calls_ = other.calls_;
}

std::string ScriptedCompletionClient::complete(const std::string& prompt, const DecodingParams&) {
    std::lock_guard lock(mu_);
    ++calls_;
    std::string response = default_response_;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& rule = rules_[i];
        if (rule.axis && prompt.rfind("Axis: " + std::string(to_string(*rule.axis)) + "\n", 0) != 0) continue;
        if (!rule.contains.empty() && prompt.find(rule.contains) == std::string::npos) continue;
        response = rule.responses[std::min(cursor_[i], rule.responses.size() - 1)];
        ++cursor_[i];
        break;
    }
    if (response == "!transport") throw TransportError("scripted transport failure");
    return response;
}

std::size_t ScriptedCompletionClient::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

// --- cache ----------------------------------------------------------------

JudgeCache::JudgeCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
}

std::optional<std::string> JudgeCache::lookup(const std::string& key) {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
    }
    if (dir_) {
        std::ifstream in(*dir_ / (key + ".json"));
        if (in) {
            try {
                auto j = nlohmann::json::parse(in);
                auto raw = j.at("raw").get<std::string>();
                entries_.emplace(key, raw);
                ++hits_;
                return raw;
            } catch (const std::exception&) {
                // unreadable entry: treat as a miss and overwrite on store
            }
        }
    }
    ++misses_;
    return std::nullopt;
}

void JudgeCache::store(const std::string& key, const std::string& raw, JudgeAxis axis, const std::string& model_id) {
    std::lock_guard lock(mu_);
    entries_[key] = raw;
    if (!dir_) return;
    nlohmann::ordered_json j;
    j["axis"] = to_string(axis);
    j["model_id"] = model_id;
    j["raw"] = raw;
    const auto final_path = *dir_ / (key + ".json");
    const auto tmp_path = *dir_ / (key + ".json.tmp");
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp_path, final_path);
}

std::size_t JudgeCache::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

std::size_t JudgeCache::misses() const {
    std::lock_guard lock(mu_);
    return misses_;
}

// --- orchestration --------------------------------------------------------

std::string judge_cache_key(JudgeAxis axis, const TaskPair& pair, const std::string& model_id) {
    std::string material = model_id;
    material += '\0';
    material += to_string(axis);
    material += '\0';
    material += build_judge_prompt(axis, pair);
    return sha256_hex(material);
}

namespace {

std::string call_with_retries(CompletionClient& client, const std::string& prompt, const JudgeOptions& options) {
    for (int attempt = 1;; ++attempt) {
        try {
            return client.complete(prompt, options.decoding);
        } catch (const TransportError&) {
            if (attempt >= options.transport_attempts) throw;
        }
    }
}

JudgeVerdict judge_one(JudgeAxis axis, const TaskPair& pair, CompletionClient& client, const JudgeOptions& options) {
    const auto model = client.model_id();
    const auto prompt = build_judge_prompt(axis, pair);
    const auto key = judge_cache_key(axis, pair, model);

    if (options.cache) {
        if (auto raw = options.cache->lookup(key)) {
            auto v = parse_verdict(*raw, axis);
            v.model_id = model;
            v.cached = true;
            return v;
        }
    }

    auto raw = call_with_retries(client, prompt, options);
    JudgeVerdict v;
    try {
        v = parse_verdict(raw, axis);
    } catch (const VerdictParseError&) {
        raw = call_with_retries(client, prompt + std::string(kVerdictReminder), options);
        v = parse_verdict(raw, axis);
    }
    v.model_id = model;
    if (options.cache) options.cache->store(key, raw, axis, model);
    return v;
}

}  // namespace

std::vector<JudgeVerdict> run_judges(const TaskPair& pair, CompletionClient& client, const JudgeOptions& options) {
    validate_pair(pair);
    std::array<std::optional<JudgeVerdict>, kJudgeAxes.size()> results;
    std::array<std::exception_ptr, kJudgeAxes.size()> errors;

    parallel_for(kJudgeAxes.size(), options.parallelism, [&](std::size_t i) {
        try {
            results[i] = judge_one(kJudgeAxes[i], pair, client, options);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });

    for (std::size_t i = 0; i < kJudgeAxes.size(); ++i) {
        if (!errors[i]) continue;
        const std::string axis(to_string(kJudgeAxes[i]));
        try {
            std::rethrow_exception(errors[i]);
        } catch (const VerdictParseError& e) {
            throw VerdictParseError(e.raw(), "judge " + axis + ": " + e.what());
        } catch (const TransportError& e) {
            throw TransportError("judge " + axis + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error("judge " + axis + ": " + e.what());
        }
    }

    std::vector<JudgeVerdict> out;
    out.reserve(kJudgeAxes.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

}  // namespace locaudit
