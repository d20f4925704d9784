#pragma once

// Deterministic scripted completion backend used for tests, demos and
// offline runs. Responses are rule templates filled with values read back
// from the prompt's case summary, so every fact a mock agent asserts is
// grounded in the record unless a fault is injected on purpose.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matec/llm.hpp"

namespace matec::llm {

enum class FaultKind { FabricateValue, Timeout, MalformedOutput };

struct FaultInjection {
    FaultKind kind = FaultKind::Timeout;
    AgentRole target;
    // FabricateValue only: the claim to falsify and the offset added to the
    // record value.
    ClaimSubject subject = ClaimSubject::Vital;
    std::string field;
    double delta = 0;
};

// Rule keys: "<Role>/<Mode>" for team-round answers, "<Role>/Synthesis" for
// the senior physician's synthesis, and "Specialist:*/<Mode>" matching any
// specialist. Rule bodies use {slot} placeholders:
//   {vital:<field>} {lab:<name>} {med:<name>} {case:<field>} {sdoh:<field>}
//   {tool:<name>} {team:<field>} {synthesis:<field>} {agent:<field>}
//   {claims:record} {variant:opening}
struct MockScript {
    std::map<std::string, std::string> rules;
    std::vector<FaultInjection> faults;
    // Simulated latency per role key; sleeps for real when realtime is set.
    std::map<std::string, int> latency_ms;
    bool realtime = false;

    static MockScript default_script();

    const std::string* find_rule(const AgentRole& role, ConsultMode mode, CallKind kind) const;
    static std::string rule_key(const AgentRole& role, ConsultMode mode, CallKind kind);
};

// Parses "timeout:CriticalCare", "malformed:Nurse",
// "fabricate:InfectiousDisease:Vital:heart_rate:40".
FaultInjection parse_fault(std::string_view spec); // throws Error("BadFault")

class MockBackend final : public CompletionBackend {
public:
    explicit MockBackend(MockScript script = MockScript::default_script(), std::uint64_t seed = 0);

    CompletionResult complete(const CompletionRequest& req) const override;
    std::string name() const override { return "mock"; }

    const MockScript& script() const { return script_; }

private:
    MockScript script_;
    std::uint64_t seed_;
};

} // namespace matec::llm
