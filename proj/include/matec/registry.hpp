#pragma once

// Agent profiles, the default sepsis team and consult roster, the structured
// prompt-template catalog, and prompt construction.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matec/domain.hpp"
#include "matec/rag.hpp"

namespace matec {

enum class Team { CoreSepsis, ConsultRoster, Support };
enum class ReasoningStyle { ChainOfThought, ReAct };

// Clinical profiles answer in the four-section schema; patient-facing ones
// answer in plain language without CLAIM lines.
enum class OutputStyle { Clinical, PatientFacing };

std::string_view to_string(Team t);
std::string_view to_string(ReasoningStyle s);

struct AgentProfile {
    AgentRole role;
    std::string display_name;
    std::string system_prompt_scaffold;
    Team team = Team::CoreSepsis;
    ReasoningStyle reasoning_style = ReasoningStyle::ChainOfThought;
    std::string charter;
    std::string shared_goals;
    double temperature = 0.2;
    OutputStyle output = OutputStyle::Clinical;
    std::string field; // specialists only, e.g. "nephrology"

    bool operator==(const AgentProfile&) const = default;
};

struct PromptTemplate {
    ConsultMode id = ConsultMode::TeamAssessment;
    std::string title;
    std::string body;
    bool operator==(const PromptTemplate&) const = default;
};

class Registry {
public:
    // Strict loader: unknown keys, duplicate roles and unknown enum names are
    // rejected with Error("BadRegistryConfig").
    static Registry from_json(const nlohmann::json& config);
    static Registry load_file(const std::filesystem::path& path);
    // The roster shipped in config/roster.json, compiled in.
    static Registry load_default();
    static std::string_view default_config_text();

    const std::vector<AgentProfile>& profiles() const { return profiles_; }
    std::vector<const AgentProfile*> team(Team t) const;

    const AgentProfile* find(const AgentRole& role) const;
    const AgentProfile& profile(const AgentRole& role) const;         // UnknownRole
    const AgentProfile& specialist(std::string_view specialty) const; // UnknownSpecialty

    const std::vector<PromptTemplate>& list_templates() const { return templates_; }
    const PromptTemplate& find_template(ConsultMode id) const;        // UnknownTemplate
    const PromptTemplate& find_template(std::string_view id) const;   // UnknownTemplate

    // Template body with {case_id}, {age}, {sex} and {chief_complaint} filled.
    std::string instantiate_template(ConsultMode id, const PatientCase& c) const;
    std::string instantiate_template(std::string_view id, const PatientCase& c) const;

    bool operator==(const Registry&) const = default;

private:
    std::vector<AgentProfile> profiles_;
    std::vector<PromptTemplate> templates_;
};

// Replaces every "{name}" with its value. A placeholder left unresolved raises
// Error("UnresolvedSlot").
std::string fill_slots(std::string_view scaffold, std::span<const std::pair<std::string_view, std::string>> values);

// The machine-parsable section instruction appended to every clinical prompt.
std::string_view output_schema_instruction(OutputStyle style);
inline constexpr std::string_view kOutputFormatHeader = "OUTPUT FORMAT:";

std::string_view reasoning_directive(ReasoningStyle style);

std::string build_system_prompt(const AgentProfile& profile);

inline constexpr std::string_view kCaseMarker = "=== PATIENT CASE ===";
inline constexpr std::string_view kContextMarker = "=== REFERENCE CONTEXT ===";
inline constexpr std::string_view kNoContextMarker = "=== NO REFERENCE CONTEXT ===";
inline constexpr std::string_view kQuestionMarker = "=== QUESTION ===";
inline constexpr std::string_view kToolMarker = "=== TOOL OBSERVATION ===";
inline constexpr std::string_view kTeamInputsMarker = "=== TEAM INPUTS ===";
inline constexpr std::string_view kSynthesisMarker = "=== TEAM SYNTHESIS ===";

// Case summary, then retrieved chunks in rank order labeled with their ids,
// then the question. Throws Error("EmptyQuestion") for a blank question and
// propagates render_case_summary errors.
std::string build_user_prompt(const PatientCase& c, std::string_view question,
                              std::span<const RetrievedChunk> context, Instant as_of);

} // namespace matec
