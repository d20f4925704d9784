#include "matec/live_backend.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "matec/http_util.hpp"

namespace matec::llm {

LiveBackendConfig with_env_key(LiveBackendConfig config) {
    if (config.api_key.empty()) {
        if (const char* key = std::getenv("MATEC_LLM_API_KEY")) config.api_key = key;
    }
    return config;
}

LiveBackend::LiveBackend(LiveBackendConfig config) : config_(std::move(config)) {
    (void)split_url(config_.base_url); // fail fast on a bad URL
}

bool extract_completion_text(const std::string& body, std::string& out) {
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded()) return false;
    const auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) return false;
    const auto& first = (*choices)[0];
    if (!first.is_object() || !first.contains("message")) return false;
    const auto& message = first["message"];
    if (!message.is_object() || !message.contains("content") || !message["content"].is_string()) return false;
    out = message["content"].get<std::string>();
    return true;
}

CompletionResult LiveBackend::complete(const CompletionRequest& req) const {
    req.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto budget = std::chrono::milliseconds(req.timeout_ms);
    const auto url = split_url(config_.base_url);

    const nlohmann::json body{
        {"model", config_.model},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", req.system_prompt}},
                                {{"role", "user"}, {"content", req.user_prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    const auto payload = body.dump();
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    if (!req.request_id.empty()) headers.emplace("X-Request-Id", req.request_id);

    CompletionResult result;
    auto elapsed = [&] { return std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start); };

    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto remaining = budget - elapsed();
        if (remaining.count() <= 0) break;
        httplib::Client client(url.origin);
        client.set_connection_timeout(remaining);
        client.set_read_timeout(remaining);
        client.set_write_timeout(remaining);
        auto res = client.Post(url.path_prefix + "/chat/completions", headers, payload, "application/json");
        result.latency_ms = elapsed().count();

        if (!res) {
            const bool timed_out = res.error() == httplib::Error::ConnectionTimeout || elapsed() >= budget;
            if (timed_out) break;
            result.status = CompletionStatus::BackendError;
            result.error = "transport error: " + httplib::to_string(res.error());
            spdlog::warn("completion for {} failed ({}), attempt {}", req.role.to_string(), result.error, attempt + 1);
            continue;
        }
        result.http_status = res->status;
        if (res->status != 200) {
            result.status = CompletionStatus::BackendError;
            result.error = "endpoint returned HTTP " + std::to_string(res->status);
            return result;
        }
        if (!extract_completion_text(res->body, result.text)) {
            result.status = CompletionStatus::MalformedResponse;
            result.error = "reply did not contain choices[0].message.content";
            return result;
        }
        result.status = CompletionStatus::Ok;
        result.error.clear();
        return result;
    }

    if (result.status != CompletionStatus::BackendError || elapsed() >= budget) {
        result.status = CompletionStatus::TimedOut;
        result.latency_ms = elapsed().count();
        result.error = "no reply within " + std::to_string(req.timeout_ms) + " ms";
    }
    return result;
}

} // namespace matec::llm
