#pragma once

// Chat-completions client for a hosted model endpoint.

#include <string>

#include "matec/llm.hpp"

namespace matec::llm {

struct LiveBackendConfig {
    std::string base_url;   // e.g. "https://api.openai.com/v1"
    std::string model;
    std::string api_key;    // usually taken from MATEC_LLM_API_KEY
};

// Reads MATEC_LLM_API_KEY when config.api_key is empty.
LiveBackendConfig with_env_key(LiveBackendConfig config);

class LiveBackend final : public CompletionBackend {
public:
    explicit LiveBackend(LiveBackendConfig config);

    // One POST to {base}/chat/completions. A transport failure is retried
    // once within the remaining timeout budget; a timeout is never retried.
    CompletionResult complete(const CompletionRequest& req) const override;
    std::string name() const override { return "live:" + config_.model; }

private:
    LiveBackendConfig config_;
};

// Pulls choices[0].message.content out of a chat-completions reply body.
// False when the body has any other shape.
bool extract_completion_text(const std::string& body, std::string& out);

} // namespace matec::llm
