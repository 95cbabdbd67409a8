#include <httplib.h>

#include <cstdlib>

#include "locaudit/error.hpp"
#include "locaudit/eval_harness.hpp"
#include "locaudit/judges.hpp"
#include "locaudit/url.hpp"

namespace locaudit {

SplitUrl split_url(std::string_view url) {
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', host_start);
    if (slash == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

namespace {

httplib::Client make_client(const std::string& base, int timeout_seconds) {
    httplib::Client client(base);
    client.set_connection_timeout(std::min(timeout_seconds, 10), 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);
    return client;
}

std::string join_path(const std::string& prefix, const std::string& suffix) {
    if (prefix.empty() || prefix == "/") return suffix;
    return (prefix.back() == '/' ? prefix.substr(0, prefix.size() - 1) : prefix) + suffix;
}

}  // namespace

// --- judge endpoint -------------------------------------------------------

HttpCompletionClient::HttpCompletionClient(std::string base_url, std::string api_key, std::string model,
                                           int timeout_seconds)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      timeout_seconds_(timeout_seconds) {}

std::unique_ptr<HttpCompletionClient> HttpCompletionClient::from_environment(const std::string& model) {
    const char* endpoint = std::getenv("JUDGE_ENDPOINT");
    if (!endpoint || !*endpoint) throw ValidationError("JUDGE_ENDPOINT is not set (use --mock for offline runs)");
    const char* key = std::getenv("JUDGE_API_KEY");
    const char* env_model = std::getenv("JUDGE_MODEL");
    return std::make_unique<HttpCompletionClient>(endpoint, key ? key : "",
                                                  env_model && *env_model ? env_model : model);
}

std::string HttpCompletionClient::complete(const std::string& prompt, const DecodingParams& params) {
    const auto url = split_url(base_url_);
    auto client = make_client(url.base, timeout_seconds_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    nlohmann::json body;
    body["model"] = model_;
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});

    auto res = client.Post(join_path(url.path, "/chat/completions"), headers, body.dump(), "application/json");
    if (!res) throw TransportError("judge endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw TransportError("judge endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("unexpected judge response: ") + e.what());
    }
}

// --- agent endpoint -------------------------------------------------------

HttpAgentAdapter::HttpAgentAdapter(AgentAdapterConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.endpoint_or_command.empty()) throw ValidationError("http adapter needs an endpoint URL");
    auto url = split_url(config_.endpoint_or_command);
    base_ = std::move(url.base);
    path_ = std::move(url.path);
}

void HttpAgentAdapter::probe() {
    auto client = make_client(base_, 5);
    auto res = client.Get("/");
    if (!res) throw TransportError("agent endpoint unreachable: " + httplib::to_string(res.error()));
}

AgentResponse HttpAgentAdapter::solve(const AgentRequest& request) {
    auto client = make_client(base_, config_.timeout_seconds);
    auto res = client.Post(path_, to_json(request).dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write) {
            throw TimeoutError("agent request failed: " + httplib::to_string(res.error()));
        }
        throw TransportError("agent request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) throw TransportError("agent returned HTTP " + std::to_string(res->status));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw ValidationError("malformed agent response: " + res->body);
    }
    return response_from_json(j);
}

}  // namespace locaudit
