#include "matec/registry.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "matec/case_model.hpp"
#include "matec/error.hpp"
#include "matec/json_codec.hpp"
#include "matec/text.hpp"

namespace matec {

namespace {

#include "default_roster.inc"

Error config_error(const std::string& msg) { return Error("BadRegistryConfig", msg); }

Team team_from(std::string_view s) {
    if (s == "CoreSepsis") return Team::CoreSepsis;
    if (s == "ConsultRoster") return Team::ConsultRoster;
    if (s == "Support") return Team::Support;
    throw config_error("unknown team: " + std::string(s));
}

ReasoningStyle style_from(std::string_view s) {
    if (s == "ChainOfThought") return ReasoningStyle::ChainOfThought;
    if (s == "ReAct") return ReasoningStyle::ReAct;
    throw config_error("unknown reasoning_style: " + std::string(s));
}

OutputStyle output_from(std::string_view s) {
    if (s == "clinical") return OutputStyle::Clinical;
    if (s == "patient_facing") return OutputStyle::PatientFacing;
    throw config_error("unknown output style: " + std::string(s));
}

// Re-labels JSON decoding failures as registry configuration errors.
template <typename F> auto config_guard(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == "BadRegistryConfig") throw;
        throw config_error(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw config_error(e.what());
    }
}

std::string str(const nlohmann::json& j, std::string_view key, std::string_view path) {
    const auto& v = json_util::require(j, key, path);
    if (!v.is_string()) throw config_error(std::string(path) + "." + std::string(key) + ": expected a string");
    return v.get<std::string>();
}

constexpr std::string_view kClinicalSchema =
    "OUTPUT FORMAT:\n"
    "Answer with these headed sections, in this order, each heading on its own line:\n"
    "ASSESSMENT:\n"
    "<your assessment from your role>\n"
    "DIFFERENTIAL:\n"
    "1. <condition> | <reasoning>   (most likely first, one per line)\n"
    "PLAN:\n"
    "- <recommendation>   (one per line)\n"
    "CLAIMS:\n"
    "CLAIM: <Vital|Lab|Medication|HistoryFact>|<name>|<value>\n"
    "List every patient-record fact you rely on as a CLAIM line, using the record's names and values, so the team "
    "can verify it.";

constexpr std::string_view kPatientFacingSchema =
    "OUTPUT FORMAT:\n"
    "ASSESSMENT:\n"
    "<a short explanation for the patient in plain, everyday language>\n"
    "PLAN:\n"
    "- <what will happen next, one item per line>\n"
    "Write for the patient, not for clinicians. Do not list record facts or verification lines.";

constexpr std::string_view kChainOfThought =
    "Reason step by step. Review the relevant findings, weigh each possibility against them, and only then state "
    "your conclusion and recommendations.";

constexpr std::string_view kReAct =
    "Work in Thought -> Action -> Observation cycles. State a thought, name the action you take (look up the record, "
    "consult the reference context, or apply a scoring tool), record what you observe, and repeat until you can "
    "answer.";

} // namespace

std::string_view to_string(Team t) {
    switch (t) {
    case Team::CoreSepsis: return "CoreSepsis";
    case Team::ConsultRoster: return "ConsultRoster";
    case Team::Support: return "Support";
    }
    return "?";
}

std::string_view to_string(ReasoningStyle s) {
    return s == ReasoningStyle::ReAct ? "ReAct" : "ChainOfThought";
}

std::string_view output_schema_instruction(OutputStyle style) {
    return style == OutputStyle::PatientFacing ? kPatientFacingSchema : kClinicalSchema;
}

std::string_view reasoning_directive(ReasoningStyle style) {
    return style == ReasoningStyle::ReAct ? kReAct : kChainOfThought;
}

std::string fill_slots(std::string_view scaffold, std::span<const std::pair<std::string_view, std::string>> values) {
    std::string out;
    out.reserve(scaffold.size() * 2);
    size_t pos = 0;
    while (pos < scaffold.size()) {
        const auto open = scaffold.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(scaffold.substr(pos));
            break;
        }
        out.append(scaffold.substr(pos, open - pos));
        const auto close = scaffold.find('}', open);
        if (close == std::string_view::npos) {
            out.append(scaffold.substr(open));
            break;
        }
        const auto name = scaffold.substr(open + 1, close - open - 1);
        const bool identifier = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        });
        if (!identifier) {
            out.push_back('{');
            pos = open + 1;
            continue;
        }
        auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
        if (it == values.end()) {
            throw Error("UnresolvedSlot", "no value for slot {" + std::string(name) + "}");
        }
        out.append(it->second);
        pos = close + 1;
    }
    return out;
}

std::string build_system_prompt(const AgentProfile& profile) {
    const std::array<std::pair<std::string_view, std::string>, 4> slots{{
        {"role_charter", profile.charter},
        {"shared_goals", profile.shared_goals},
        {"output_schema", std::string(output_schema_instruction(profile.output))},
        {"reasoning_style", std::string(reasoning_directive(profile.reasoning_style))},
    }};
    auto prompt = fill_slots(profile.system_prompt_scaffold, slots);
    // Slot values themselves must not smuggle placeholders through.
    const std::span<const std::pair<std::string_view, std::string>> none;
    fill_slots(prompt, none);
    return prompt;
}

std::string build_user_prompt(const PatientCase& c, std::string_view question, std::span<const RetrievedChunk> context,
                              Instant as_of) {
    if (text::trim(question).empty()) throw Error("EmptyQuestion", "question must be nonempty");
    std::ostringstream out;
    out << kCaseMarker << '\n' << render_case_summary(c, as_of);
    if (context.empty()) {
        out << kNoContextMarker << '\n';
    } else {
        out << kContextMarker << '\n';
        for (const auto& rc : context) {
            out << '[' << rc.rank << "] (" << rc.chunk.chunk_id.to_string() << ") " << rc.chunk.source_title << '\n'
                << rc.chunk.text << '\n';
        }
    }
    out << kQuestionMarker << '\n' << text::trim(question) << '\n';
    return out.str();
}

Registry Registry::from_json(const nlohmann::json& config) {
    return config_guard([&] {
        json_util::expect_object(config, "$",
                                 {"schema_version", "scaffold", "shared_goals", "agents", "specialists", "templates"});
        if (json_util::require(config, "schema_version", "$") != kSchemaVersion) {
            throw config_error("unsupported schema_version");
        }
        Registry reg;
        const auto scaffold = str(config, "scaffold", "$");

        const auto& goals_json = json_util::require(config, "shared_goals", "$");
        json_util::expect_object(goals_json, "$.shared_goals", {"CoreSepsis", "ConsultRoster", "Support"});
        auto goals_for = [&](Team t) { return str(goals_json, to_string(t), "$.shared_goals"); };

        std::set<AgentRole> seen;
        const auto& agents = json_util::require(config, "agents", "$");
        if (!agents.is_array()) throw config_error("$.agents: expected an array");
        for (size_t i = 0; i < agents.size(); ++i) {
            const auto path = "$.agents[" + std::to_string(i) + "]";
            const auto& a = agents[i];
            json_util::expect_object(
                a, path, {"role", "display_name", "team", "reasoning_style", "temperature", "output", "charter", "scaffold"});
            AgentProfile p;
            p.role = AgentRole::parse(str(a, "role", path));
            if (p.role.kind == RoleKind::Specialist) throw config_error(path + ": specialists belong in $.specialists");
            p.display_name = str(a, "display_name", path);
            p.team = team_from(str(a, "team", path));
            p.reasoning_style = style_from(str(a, "reasoning_style", path));
            p.temperature = json_util::require(a, "temperature", path).get<double>();
            p.output = output_from(str(a, "output", path));
            p.charter = str(a, "charter", path);
            p.system_prompt_scaffold = a.contains("scaffold") ? str(a, "scaffold", path) : scaffold;
            p.shared_goals = goals_for(p.team);
            if (!seen.insert(p.role).second) throw config_error(path + ": duplicate role " + p.role.to_string());
            reg.profiles_.push_back(std::move(p));
        }

        const auto& spec = json_util::require(config, "specialists", "$");
        json_util::expect_object(spec, "$.specialists",
                                 {"team", "reasoning_style", "temperature", "charter_template", "roster"});
        const auto spec_team = team_from(str(spec, "team", "$.specialists"));
        const auto spec_style = style_from(str(spec, "reasoning_style", "$.specialists"));
        const auto spec_temp = json_util::require(spec, "temperature", "$.specialists").get<double>();
        const auto charter_template = str(spec, "charter_template", "$.specialists");
        const auto& roster = json_util::require(spec, "roster", "$.specialists");
        if (!roster.is_array()) throw config_error("$.specialists.roster: expected an array");
        for (size_t i = 0; i < roster.size(); ++i) {
            const auto path = "$.specialists.roster[" + std::to_string(i) + "]";
            json_util::expect_object(roster[i], path, {"name", "field"});
            AgentProfile p;
            const auto name = str(roster[i], "name", path);
            p.role = AgentRole::specialist(name);
            p.display_name = name;
            p.field = str(roster[i], "field", path);
            p.team = spec_team;
            p.reasoning_style = spec_style;
            p.temperature = spec_temp;
            const std::array<std::pair<std::string_view, std::string>, 2> slots{{{"specialty", name}, {"field", p.field}}};
            p.charter = fill_slots(charter_template, slots);
            p.system_prompt_scaffold = scaffold;
            p.shared_goals = goals_for(p.team);
            if (!seen.insert(p.role).second) throw config_error(path + ": duplicate specialist " + name);
            reg.profiles_.push_back(std::move(p));
        }

        const auto& templates = json_util::require(config, "templates", "$");
        if (!templates.is_array()) throw config_error("$.templates: expected an array");
        std::set<ConsultMode> ids;
        for (size_t i = 0; i < templates.size(); ++i) {
            const auto path = "$.templates[" + std::to_string(i) + "]";
            json_util::expect_object(templates[i], path, {"id", "title", "body"});
            PromptTemplate t;
            t.id = enum_from_string<ConsultMode>(str(templates[i], "id", path));
            if (!is_team_mode(t.id)) throw config_error(path + ": templates exist only for team modes");
            if (!ids.insert(t.id).second) throw config_error(path + ": duplicate template id");
            t.title = str(templates[i], "title", path);
            t.body = str(templates[i], "body", path);
            reg.templates_.push_back(std::move(t));
        }

        // Every profile must render; catches scaffolds with unknown slots at load time.
        for (const auto& p : reg.profiles_) build_system_prompt(p);
        return reg;
    });
}

Registry Registry::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open roster file: " + path.string());
    return config_guard([&] { return from_json(nlohmann::json::parse(in)); });
}

std::string_view Registry::default_config_text() { return kDefaultRosterJson; }

Registry Registry::load_default() {
    return config_guard([] { return from_json(nlohmann::json::parse(kDefaultRosterJson)); });
}

std::vector<const AgentProfile*> Registry::team(Team t) const {
    std::vector<const AgentProfile*> out;
    for (const auto& p : profiles_) {
        if (p.team == t) out.push_back(&p);
    }
    return out;
}

const AgentProfile* Registry::find(const AgentRole& role) const {
    for (const auto& p : profiles_) {
        if (p.role == role) return &p;
    }
    return nullptr;
}

const AgentProfile& Registry::profile(const AgentRole& role) const {
    if (const auto* p = find(role)) return *p;
    throw Error("UnknownRole", "no profile for role " + role.to_string());
}

const AgentProfile& Registry::specialist(std::string_view specialty) const {
    const auto wanted = text::normalize(specialty);
    for (const auto& p : profiles_) {
        if (p.role.kind == RoleKind::Specialist && p.team == Team::ConsultRoster &&
            text::normalize(p.role.specialty) == wanted) {
            return p;
        }
    }
    throw Error("UnknownSpecialty", "no consult specialist named '" + std::string(specialty) + "'");
}

const PromptTemplate& Registry::find_template(ConsultMode id) const {
    for (const auto& t : templates_) {
        if (t.id == id) return t;
    }
    throw Error("UnknownTemplate", "no template for mode " + std::string(to_string(id)));
}

const PromptTemplate& Registry::find_template(std::string_view id) const {
    for (const auto& t : templates_) {
        if (to_string(t.id) == id) return t;
    }
    throw Error("UnknownTemplate", "unknown template id '" + std::string(id) + "'");
}

std::string Registry::instantiate_template(ConsultMode id, const PatientCase& c) const {
    const auto& t = find_template(id);
    const std::array<std::pair<std::string_view, std::string>, 4> slots{{
        {"case_id", c.case_id},
        {"age", std::to_string(c.demographics.age)},
        {"sex", std::string(matec::to_string(c.demographics.sex))},
        {"chief_complaint", c.chief_complaint},
    }};
    return fill_slots(t.body, slots);
}

std::string Registry::instantiate_template(std::string_view id, const PatientCase& c) const {
    return instantiate_template(find_template(id).id, c);
}

} // namespace matec
