#pragma once

// Provider-agnostic completion interface and the structured-response parser.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "matec/domain.hpp"

namespace matec::llm {

// A team-round answer in the four-section schema, or the senior physician's
// synthesis over the team's answers.
enum class CallKind { TeamMember, Synthesis };

struct CompletionRequest {
    std::string system_prompt;
    std::string user_prompt;
    AgentRole role;
    ConsultMode mode = ConsultMode::TeamAssessment;
    CallKind kind = CallKind::TeamMember;
    int max_tokens = 1500;
    double temperature = 0.2;
    int timeout_ms = 30000;
    std::string request_id;

    // Throws Error("BadRequest") when timeout_ms <= 0, a prompt is empty, or
    // temperature is outside [0, 2].
    void validate() const;
};

enum class CompletionStatus { Ok, TimedOut, BackendError, MalformedResponse };
std::string_view to_string(CompletionStatus s);

struct CompletionResult {
    std::string text;
    CompletionStatus status = CompletionStatus::Ok;
    std::int64_t latency_ms = 0;
    int http_status = 0;   // live backend only
    std::string error;     // human-readable detail for non-Ok results
};

// Backends are shareable and `complete` may be called concurrently.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual CompletionResult complete(const CompletionRequest& req) const = 0;
    virtual std::string name() const = 0;
};

struct ParsedResponse {
    StructuredResponse sections;
    ResponseStatus status = ResponseStatus::Ok;
};

// Tolerant parse of the ASSESSMENT / DIFFERENTIAL / PLAN / CLAIMS sections.
// Headings may carry markdown decoration and any case. A missing or empty
// ASSESSMENT yields Malformed; missing other sections yield empty lists.
// Claim lines follow `CLAIM: <subject>|<name>|<value>`.
ParsedResponse parse_structured(std::string_view text, const AgentRole& role = {});

// Canonical section rendering; parse_structured inverts it.
std::string render_structured(const StructuredResponse& r);

// Removes every CLAIM line (patient-facing output never carries them).
std::string strip_claim_lines(std::string_view text);

// Splits a "- item" / "1. item" / "* item" list line into its content.
std::string_view strip_list_marker(std::string_view line);

} // namespace matec::llm
