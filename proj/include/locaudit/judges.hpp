#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "locaudit/error.hpp"
#include "locaudit/task_model.hpp"

namespace locaudit {

enum class JudgeAxis { fluency, adequacy, qa_compatibility, cultural_appropriateness };

inline constexpr std::array<JudgeAxis, 4> kJudgeAxes = {
    JudgeAxis::fluency,
    JudgeAxis::adequacy,
    JudgeAxis::qa_compatibility,
    JudgeAxis::cultural_appropriateness,
};

std::string_view to_string(JudgeAxis a);
std::optional<JudgeAxis> parse_judge_axis(std::string_view s);
IssueCategory category_for(JudgeAxis a);

struct JudgeVerdict {
    JudgeAxis axis = JudgeAxis::fluency;
    bool passed = true;
    std::string rationale;
    std::string model_id;
    bool cached = false;

    bool operator==(const JudgeVerdict&) const = default;
};

// The persisted form omits `cached`, which describes one run, not the verdict.
nlohmann::ordered_json to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const nlohmann::json& j);

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = 200;
};

class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    // Throws TransportError when the endpoint cannot produce a completion.
    virtual std::string complete(const std::string& prompt, const DecodingParams& params) = 0;
    virtual std::string model_id() const = 0;
};

// Deterministic stand-in for a judge endpoint. Rules are tried in order; a
// rule matches when its axis (if any) is the prompt's axis and its
// `contains` text (if any) occurs in the prompt. A matching rule hands out
// its responses in sequence, repeating the last one. A response of the form
// "!transport" raises TransportError instead.
class ScriptedCompletionClient : public CompletionClient {
public:
    struct Rule {
        std::optional<JudgeAxis> axis;
        std::string contains;
        std::vector<std::string> responses;
    };

    explicit ScriptedCompletionClient(std::vector<Rule> rules = {}, std::string model_id = "scripted-judge",
                                      std::string default_response = "PASS\nno issue found");

    // One JSON rule per line: {"axis"?, "contains"?, "response" | "responses"}.
    static ScriptedCompletionClient from_jsonl(const std::string& path);

    ScriptedCompletionClient(ScriptedCompletionClient&& other) noexcept;

    std::string complete(const std::string& prompt, const DecodingParams& params) override;
    std::string model_id() const override { return model_id_; }
    std::size_t calls() const;

private:
    std::vector<Rule> rules_;
    std::vector<std::size_t> cursor_;
    std::string model_id_;
    std::string default_response_;
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

// Chat-completion style endpoint: POST {base_url}/chat/completions with a
// bearer credential, reading choices[0].message.content.
class HttpCompletionClient : public CompletionClient {
public:
    HttpCompletionClient(std::string base_url, std::string api_key, std::string model, int timeout_seconds = 60);

    // Reads JUDGE_ENDPOINT and JUDGE_API_KEY; model from JUDGE_MODEL or the argument.
    static std::unique_ptr<HttpCompletionClient> from_environment(const std::string& model);

    std::string complete(const std::string& prompt, const DecodingParams& params) override;
    std::string model_id() const override { return model_; }

private:
    std::string base_url_;
    std::string api_key_;
    std::string model_;
    int timeout_seconds_;
};

// Raw completions keyed by content hash. In-memory, optionally mirrored to
// one file per entry under a directory. Safe for concurrent use.
class JudgeCache {
public:
    JudgeCache() = default;
    explicit JudgeCache(std::filesystem::path dir);

    std::optional<std::string> lookup(const std::string& key);
    void store(const std::string& key, const std::string& raw, JudgeAxis axis, const std::string& model_id);

    std::size_t hits() const;
    std::size_t misses() const;

private:
    std::optional<std::filesystem::path> dir_;
    std::map<std::string, std::string> entries_;
    mutable std::mutex mu_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

class VerdictParseError : public Error {
public:
    VerdictParseError(std::string raw, const std::string& message) : Error(message), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

std::string build_judge_prompt(JudgeAxis axis, const TaskPair& pair);

// Appended to the prompt on the single retry after an unparsable reply.
inline constexpr std::string_view kVerdictReminder =
    "\n\nYour previous reply could not be read. Answer PASS or FAIL only on the first line.";

// The verdict is the first token of the final non-empty line; when that line
// is a reason line, the line before it. Throws VerdictParseError.
JudgeVerdict parse_verdict(const std::string& raw, JudgeAxis axis);

std::string judge_cache_key(JudgeAxis axis, const TaskPair& pair, const std::string& model_id);

struct JudgeOptions {
    JudgeCache* cache = nullptr;
    std::size_t parallelism = 4;
    int transport_attempts = 3;
    DecodingParams decoding;
};

// Four verdicts in axis order, each from an independent completion call.
// Any axis failure fails the whole call; the error names the axis.
std::vector<JudgeVerdict> run_judges(const TaskPair& pair, CompletionClient& client, const JudgeOptions& options = {});

}  // namespace locaudit
