#pragma once

// The consultation pipeline: retrieve, fan out to the team, synthesize,
// verify claims against the record, and aggregate care gaps.

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matec/domain.hpp"
#include "matec/llm.hpp"
#include "matec/rag.hpp"
#include "matec/registry.hpp"

namespace matec {

struct OrchestratorConfig {
    int parallelism = 5;
    int agent_timeout_ms = 30000;
    int retrieval_k = 4;
    // false restricts the synthesis inputs to doctor roles.
    bool synthesis_includes_all_roles = true;
    // Feeds created_at. Defaults to the system clock.
    std::function<Instant()> clock;
};

struct RunOptions {
    std::string transcript_id;                  // derived when empty
    const Transcript* prior = nullptr;          // follow-up context
    std::vector<AgentRole> team;                // empty selects the core sepsis team
};

struct DischargeSummary {
    std::string text;
    std::vector<std::string> barriers;
};

inline constexpr std::string_view kPriorMarker = "=== PRIOR CONSULTATION ===";

class Orchestrator {
public:
    // `store` may be null, in which case prompts carry no reference context.
    Orchestrator(const Registry& registry, const llm::CompletionBackend& backend, const VectorStore* store,
                 OrchestratorConfig config = {});

    // Throws BadMode for non-team modes, UnknownRole for an unknown team
    // member, NoAgentsAvailable for an empty team, InvalidCase and
    // SynthesisBackendFailure.
    Transcript run_consultation(const PatientCase& c, std::string question, ConsultMode mode,
                                const RunOptions& options = {}) const;

    // Throws UnknownSpecialty.
    Transcript consult_specialist(std::string_view specialty, const PatientCase& c, std::string question,
                                  const std::string& transcript_id = {}) const;

    // Patient-facing explanation of a transcript's synthesis. Throws
    // MissingSynthesis and AgentCallFailed.
    std::string navigator_explain(const PatientCase& c, const Transcript& t) const;

    // Uses the most recent transcript that carries a synthesis. Throws
    // MissingSynthesis and AgentCallFailed.
    DischargeSummary discharge_summary(const PatientCase& c, std::span<const Transcript> transcripts) const;

    // Senior physician synthesis over the Ok responses. Throws
    // SynthesisBackendFailure.
    SynthesisReport synthesize(std::span<const AgentResponse> responses, const PatientCase& c,
                               std::string_view question, std::span<const RetrievedChunk> context) const;

    const OrchestratorConfig& config() const { return config_; }

private:
    std::vector<RetrievedChunk> retrieve(const PatientCase& c, std::string_view question) const;
    std::vector<AgentResponse> fan_out(std::span<const AgentProfile* const> team, const PatientCase& c,
                                       const std::string& user_prompt, ConsultMode mode, Instant as_of) const;
    llm::CompletionResult call(const AgentProfile& profile, std::string system_prompt, std::string user_prompt,
                               ConsultMode mode, llm::CallKind kind) const;
    std::string next_id(std::string_view seed_text) const;

    const Registry& registry_;
    const llm::CompletionBackend& backend_;
    const VectorStore* store_;
    OrchestratorConfig config_;
    mutable std::atomic<std::uint64_t> counter_{0};
};

// The record time agents reason about: the last vitals observation.
// Throws AsOfBeforeAllData when the case has no vitals.
Instant record_time(const PatientCase& c);

// Record-grounded claim checks over the Ok responses plus the synthesis.
VerificationReport verify(const SynthesisReport* synthesis, std::span<const AgentResponse> responses,
                          const PatientCase& c, std::span<const RetrievedChunk> context, Instant as_of);

// Categorized, deduplicated care-plan gaps from the Ok responses' plans.
GapReport aggregate_gaps(std::span<const AgentResponse> responses);
GapCategory categorize_gap(std::string_view finding, std::string* stripped = nullptr);

// Merges reports category by category, deduplicating by normalized text.
GapReport merge_gap_reports(std::span<const GapReport> reports);

// Diagnoses listed by at least ceil(n/2) of the n differentials; with a
// single differential, just its top diagnosis.
std::vector<std::string> mechanical_consensus(std::span<const AgentResponse> responses);
// A "Most likely diagnosis" topic when the top-ranked diagnoses differ.
std::optional<DivergenceTopic> mechanical_divergence(std::span<const AgentResponse> responses);

// Parses the senior physician's FINAL DIAGNOSIS / CONSENSUS / DIVERGENCE /
// CARE PLAN / NEXT STEPS / CLAIMS output.
SynthesisReport parse_synthesis(std::string_view text, const AgentRole& role);
std::string render_synthesis(const SynthesisReport& s);

// "heart rate", "HR", "pulse" -> "heart_rate"; unknown names normalized only.
std::string canonical_vital_name(std::string_view name);

// SDOH items that block or complicate discharge.
std::vector<std::string> discharge_barriers(const SocialDeterminants& s);

} // namespace matec
