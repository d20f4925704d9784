#include "matec/mock_backend.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <sstream>
#include <thread>

#include "matec/error.hpp"
#include "matec/registry.hpp"
#include "matec/text.hpp"

namespace matec::llm {

namespace {

// ------------------------------------------------------------------ prompt view

// Values the mock can read back out of a user prompt.
struct PromptView {
    std::map<std::string, std::string> header;                        // "CHIEF COMPLAINT" -> text
    std::map<std::string, std::map<std::string, std::string>> blocks; // "VITALS" -> field -> raw value
    std::vector<std::string> lab_order;
    std::vector<std::string> med_order;
    std::map<std::string, std::string> tool;
    std::vector<std::pair<std::string, ParsedResponse>> team;         // role label -> answer
    std::string final_diagnosis;
    std::vector<std::string> care_plan;
};

std::string first_token(std::string_view s) {
    s = text::trim(s);
    return std::string(s.substr(0, s.find(' ')));
}

PromptView read_prompt(std::string_view prompt) {
    PromptView view;
    enum class Area { None, Case, Tool, Team, Synthesis } area = Area::None;
    std::string block;
    std::string team_label;
    std::string team_text;
    auto flush_team = [&] {
        if (!team_label.empty()) view.team.emplace_back(team_label, parse_structured(team_text));
        team_label.clear();
        team_text.clear();
    };
    bool in_care_plan = false;

    for (auto raw : text::split_lines(prompt)) {
        const auto line = text::trim(raw);
        if (line.starts_with("=== ")) {
            flush_team();
            area = line == kCaseMarker        ? Area::Case
                   : line == kToolMarker       ? Area::Tool
                   : line == kTeamInputsMarker ? Area::Team
                   : line == kSynthesisMarker  ? Area::Synthesis
                                               : Area::None;
            block.clear();
            continue;
        }
        switch (area) {
        case Area::Case: {
            const bool indented = raw.starts_with("  ");
            const auto colon = line.find(':');
            if (!indented) {
                if (colon == std::string_view::npos) break;
                const auto key = std::string(line.substr(0, colon));
                if (key.starts_with("VITALS")) {
                    block = "VITALS";
                } else if (key == "LABS" || key == "MEDICATIONS" || key == "SDOH") {
                    block = key;
                } else {
                    block.clear();
                    view.header[key] = std::string(text::trim(line.substr(colon + 1)));
                }
            } else if (!block.empty() && colon != std::string_view::npos) {
                const auto key = std::string(text::trim(line.substr(0, colon)));
                const auto value = std::string(text::trim(line.substr(colon + 1)));
                if (block == "LABS" || block == "MEDICATIONS") {
                    auto& order = block == "LABS" ? view.lab_order : view.med_order;
                    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
                    view.blocks[block][key] = first_token(value);
                } else {
                    view.blocks[block][key] = value;
                }
            }
            break;
        }
        case Area::Tool:
            if (const auto colon = line.find(':'); colon != std::string_view::npos) {
                view.tool[std::string(text::trim(line.substr(0, colon)))] = std::string(text::trim(line.substr(colon + 1)));
            }
            break;
        case Area::Team:
            if (line.starts_with("--- ") && line.ends_with(" ---")) {
                flush_team();
                team_label = std::string(line.substr(4, line.size() - 8));
            } else {
                team_text.append(raw);
                team_text.push_back('\n');
            }
            break;
        case Area::Synthesis:
            if (text::starts_with_ci(line, "FINAL DIAGNOSIS:")) {
                view.final_diagnosis = std::string(text::trim(line.substr(16)));
                in_care_plan = false;
            } else if (text::starts_with_ci(line, "CARE PLAN:")) {
                in_care_plan = true;
            } else if (line.ends_with(":")) {
                in_care_plan = false;
            } else if (in_care_plan && !line.empty()) {
                view.care_plan.emplace_back(strip_list_marker(line));
            }
            break;
        case Area::None:
            break;
        }
    }
    flush_team();
    return view;
}

// ------------------------------------------------------------------ slot values

std::string working_diagnosis(const PromptView& view) {
    auto find = [&](const char* key) {
        auto it = view.header.find(key);
        return it == view.header.end() ? std::string() : text::lower(it->second);
    };
    const auto haystack = find("CHIEF COMPLAINT") + " " + find("HISTORY");
    struct Rule {
        std::array<std::string_view, 3> keywords;
        std::string_view diagnosis;
    };
    static constexpr Rule rules[] = {
        {{"endocarditis", "murmur", "vegetation"}, "Sepsis due to infective endocarditis with septic emboli"},
        {{"pneumonia", "productive cough", "infiltrate"}, "Sepsis due to community-acquired pneumonia"},
        {{"pyelonephritis", "dysuria", "flank pain"}, "Sepsis due to acute pyelonephritis"},
        {{"cholangitis", "abdominal pain", "peritonitis"}, "Sepsis due to intra-abdominal infection"},
        {{"cellulitis", "abscess", "wound"}, "Sepsis due to skin and soft tissue infection"},
    };
    for (const auto& r : rules) {
        for (auto k : r.keywords) {
            if (haystack.find(k) != std::string::npos) return std::string(r.diagnosis);
        }
    }
    return "Sepsis of undetermined source";
}

std::string first_sentence(std::string_view s) {
    s = text::trim(s);
    const auto dot = s.find(". ");
    auto out = s.substr(0, dot);
    while (!out.empty() && out.back() == '.') out.remove_suffix(1);
    return std::string(out);
}

const std::string* lookup(const PromptView& v, const std::string& block, const std::string& key) {
    auto b = v.blocks.find(block);
    if (b == v.blocks.end()) return nullptr;
    auto it = b->second.find(key);
    return it == b->second.end() ? nullptr : &it->second;
}

std::string record_claims(const PromptView& v) {
    std::string out;
    for (const char* field : {"temperature", "heart_rate", "systolic_bp", "respiration_rate", "spo2"}) {
        if (const auto* value = lookup(v, "VITALS", field)) out += "CLAIM: Vital|" + std::string(field) + "|" + *value + "\n";
    }
    for (const auto& name : v.lab_order) out += "CLAIM: Lab|" + name + "|" + *lookup(v, "LABS", name) + "\n";
    for (const auto& name : v.med_order) out += "CLAIM: Medication|" + name + "|" + *lookup(v, "MEDICATIONS", name) + "\n";
    if (auto it = v.header.find("HISTORY"); it != v.header.end()) {
        if (auto fact = first_sentence(it->second); !fact.empty()) out += "CLAIM: HistoryFact|history|" + fact + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string sdoh_value(const PromptView& v, const std::string& field) {
    const auto* flags = lookup(v, "SDOH", "flags");
    const std::string flag_text = flags ? *flags : "none";
    if (field == "referral") {
        if (flag_text == "none") return "No social services referral indicated by the documented SDOH";
        std::string joined = flag_text;
        for (size_t at; (at = joined.find("; ")) != std::string::npos;) joined.replace(at, 2, " and ");
        return "Refer to social services to address " + joined;
    }
    if (field == "substance_gap") {
        const auto* use = lookup(v, "SDOH", "substance_use");
        if (use && *use == "Active") {
            return "Substance use disorder treatment (addiction medicine consult, medication for opioid use disorder) "
                   "is missing from the plan";
        }
        return "No substance use treatment gap identified";
    }
    if (const auto* value = lookup(v, "SDOH", field)) return *value;
    return "not documented";
}

std::string team_top_diagnosis(const PromptView& v) {
    std::vector<std::pair<std::string, int>> counts;
    for (const auto& [label, answer] : v.team) {
        if (answer.sections.differential.empty()) continue;
        const auto& top = answer.sections.differential.front().condition;
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return text::normalize(c.first) == text::normalize(top); });
        if (it == counts.end()) {
            counts.emplace_back(top, 1);
        } else {
            ++it->second;
        }
    }
    if (counts.empty()) return "Sepsis of undetermined source";
    // First-seen wins ties, keeping the pick independent of map ordering.
    const auto best = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    return best->first;
}

std::string team_plan(const PromptView& v) {
    std::vector<std::string> items;
    std::vector<std::string> seen;
    for (const auto& [label, answer] : v.team) {
        if (answer.sections.plan.empty()) continue;
        const auto& item = answer.sections.plan.front();
        const auto norm = text::normalize(item);
        if (std::find(seen.begin(), seen.end(), norm) != seen.end()) continue;
        seen.push_back(norm);
        items.push_back("- " + item);
    }
    std::string out;
    for (const auto& i : items) out += i + "\n";
    if (!out.empty()) out.pop_back();
    return out;
}

struct Expander {
    const PromptView& view;
    const CompletionRequest& req;
    std::uint64_t seed;

    std::string value(std::string_view kind, const std::string& name) const {
        if (kind == "vital") {
            const auto* v = lookup(view, "VITALS", name);
            return v ? *v : "not available";
        }
        if (kind == "lab") {
            const auto* v = lookup(view, "LABS", name);
            return v ? *v : "not available";
        }
        if (kind == "med") {
            const auto* v = lookup(view, "MEDICATIONS", name);
            return v ? *v : "not available";
        }
        if (kind == "case") {
            if (name == "working_diagnosis") return working_diagnosis(view);
            if (name == "medications") {
                if (view.med_order.empty()) return "no active orders";
                std::string joined;
                for (const auto& m : view.med_order) joined += (joined.empty() ? "" : ", ") + m;
                return joined;
            }
            if (name == "first_medication") return view.med_order.empty() ? "current medications" : view.med_order.front();
            if (name == "age") {
                auto it = view.header.find("DEMOGRAPHICS");
                if (it == view.header.end()) return "adult";
                auto age = first_token(it->second.substr(std::min<size_t>(4, it->second.size())));
                if (!age.empty() && age.back() == ',') age.pop_back();
                return age;
            }
            static const std::map<std::string, std::string> keys{
                {"chief_complaint", "CHIEF COMPLAINT"}, {"history", "HISTORY"}, {"current_plan", "CURRENT PLAN"}, {"case_id", "CASE"}};
            if (auto k = keys.find(name); k != keys.end()) {
                auto it = view.header.find(k->second);
                return it == view.header.end() ? "not documented" : it->second;
            }
        }
        if (kind == "sdoh") return sdoh_value(view, name);
        if (kind == "tool") {
            auto it = view.tool.find(name);
            return it == view.tool.end() ? "not available" : it->second;
        }
        if (kind == "team") {
            if (name == "top_diagnosis") return team_top_diagnosis(view);
            if (name == "plan") return team_plan(view);
        }
        if (kind == "synthesis") {
            if (name == "final_diagnosis") return view.final_diagnosis.empty() ? "an infection" : view.final_diagnosis;
            if (name == "care_plan") {
                std::string out;
                for (const auto& item : view.care_plan) out += "- " + item + "\n";
                if (!out.empty()) out.pop_back();
                return out;
            }
        }
        if (kind == "agent") {
            if (name == "specialty") return req.role.kind == RoleKind::Specialist ? req.role.specialty : req.role.to_string();
        }
        if (kind == "claims" && name == "record") return record_claims(view);
        if (kind == "variant" && name == "opening") {
            static constexpr std::array<std::string_view, 3> openings{
                "After reviewing the record,", "Based on the current findings,", "On review of this case,"};
            const auto h = text::fnv1a(MockScript::rule_key(req.role, req.mode, req.kind), seed ^ 0x9e3779b97f4a7c15ULL);
            return std::string(openings[h % openings.size()]);
        }
        throw Error("BadMockRule", "unknown mock slot {" + std::string(kind) + ":" + name + "}");
    }

    std::string expand(std::string_view rule) const {
        std::string out;
        size_t pos = 0;
        while (pos < rule.size()) {
            const auto open = rule.find('{', pos);
            if (open == std::string_view::npos) {
                out.append(rule.substr(pos));
                break;
            }
            const auto close = rule.find('}', open);
            const auto colon = rule.find(':', open);
            if (close == std::string_view::npos || colon == std::string_view::npos || colon > close) {
                out.append(rule.substr(pos, open + 1 - pos));
                pos = open + 1;
                continue;
            }
            out.append(rule.substr(pos, open - pos));
            out.append(value(rule.substr(open + 1, colon - open - 1), std::string(rule.substr(colon + 1, close - colon - 1))));
            pos = close + 1;
        }
        return out;
    }
};

// ------------------------------------------------------------------ fault helpers

std::string fabricate(const std::string& response, const FaultInjection& f, const PromptView& view, const AgentRole& role) {
    const std::string block = f.subject == ClaimSubject::Vital ? "VITALS" : f.subject == ClaimSubject::Lab ? "LABS" : "MEDICATIONS";
    double record = 0;
    if (const auto* v = lookup(view, block, f.field)) record = text::parse_number(*v).value_or(0);
    const auto fake = text::format_number(record + f.delta);
    const auto fake_line = "CLAIM: " + std::string(to_string(f.subject)) + "|" + f.field + "|" + fake;

    std::string out;
    bool replaced = false;
    for (auto line : text::split_lines(response)) {
        auto parsed = parse_structured("ASSESSMENT: x\n" + std::string(line), role);
        if (!parsed.sections.claims.empty()) {
            const auto& c = parsed.sections.claims.front();
            if (c.subject == f.subject && text::normalize(c.name) == text::normalize(f.field)) {
                out += fake_line + "\n";
                replaced = true;
                continue;
            }
        }
        out.append(line);
        out.push_back('\n');
    }
    if (!replaced) {
        if (out.find("CLAIMS:") == std::string::npos) out += "CLAIMS:\n";
        out += fake_line + "\n";
    }
    return out;
}

// ------------------------------------------------------------------ default script

struct RoleContent {
    RoleKind kind;
    std::string_view focus;
    std::vector<std::string_view> differential;
    std::vector<std::string_view> plan;
    std::vector<std::string_view> gaps;
};

std::vector<RoleContent> default_role_content() {
    return {
        {RoleKind::EmergencyMedicine,
         "the presentation of {case:chief_complaint} meets sepsis criteria with temperature {vital:temperature} C, heart "
         "rate {vital:heart_rate} and systolic pressure {vital:systolic_bp} mmHg",
         {"{case:working_diagnosis} | Fever, tachycardia and the history point to this source",
          "Community-acquired pneumonia | Consider given the respiratory rate; chest imaging pending",
          "Drug toxicity or withdrawal | Relevant when active substance use is reported"},
         {"Obtain two sets of blood cultures before the next antibiotic dose",
          "Give 30 mL/kg crystalloid if hypotensive or lactate is 4 mmol/L or higher",
          "Start empiric broad-spectrum antibiotics within one hour of recognition"},
         {"[Diagnosis] Blood cultures and lactate were not repeated after the initial set",
          "[Treatment] Time to first antibiotic dose is not documented against the one-hour target"}},
        {RoleKind::Hospitalist,
         "this admission for {case:chief_complaint} needs a unifying diagnosis and close inpatient follow-up",
         {"{case:working_diagnosis} | Unifying diagnosis for fever, bacteremia risk and examination",
          "Septic arthritis or osteomyelitis | Possible seeding from bacteremia",
          "Acute kidney injury from sepsis | Follow the creatinine trend"},
         {"Admit to a monitored bed with hourly vital signs",
          "Trend creatinine and avoid nephrotoxic combinations",
          "Review the antibiotic plan daily with infectious disease"},
         {"[Monitoring] NEWS2 is not recalculated at a fixed interval",
          "[Coordination] No discharge planning or primary care hand-off is documented"}},
        {RoleKind::InfectiousDisease,
         "the likely source and organism drive therapy; current antimicrobials are {case:medications}",
         {"{case:working_diagnosis} | Bloodstream infection with embolic features fits best",
          "Staphylococcus aureus bacteremia without endocarditis | Echocardiography needed to exclude valve involvement",
          "Septic thrombophlebitis | Consider with injection-related risk"},
         {"Tailor antimicrobials once culture speciation and susceptibilities return",
          "Obtain transthoracic, then transesophageal, echocardiography",
          "Repeat blood cultures every 24 to 48 hours until clearance"},
         {"[Diagnosis] Echocardiography is not ordered despite bacteremia risk",
          "[Treatment] The plan lacks a defined antibiotic duration and stop date"}},
        {RoleKind::CriticalCare,
         "hemodynamics show systolic pressure {vital:systolic_bp} mmHg and respiratory rate {vital:respiration_rate}; "
         "organ support needs must be anticipated",
         {"{case:working_diagnosis} | Distributive physiology fits this source",
          "Septic shock with evolving organ dysfunction | Watch lactate and urine output",
          "Cardiogenic component | Valve dysfunction can reduce cardiac output"},
         {"Target mean arterial pressure of at least 65 mmHg and start norepinephrine if fluids fail",
          "Place an arterial line if vasopressors are required",
          "Escalate to intensive care if NEWS2 reaches the high band"},
         {"[Monitoring] No escalation threshold for transfer to intensive care is documented",
          "[Treatment] Fluid responsiveness is not reassessed after the initial bolus"}},
        {RoleKind::SeniorPhysician,
         "the team findings converge; facts below are restated from the record for verification",
         {"{case:working_diagnosis} | Most consistent with the combined findings",
          "Sepsis from an alternative bloodstream source | Less likely given the history"},
         {"Confirm the working diagnosis when echocardiography and cultures return",
          "Keep the team on a single antimicrobial plan",
          "Review the plan with the human attending physician"},
         {"[Coordination] Specialist input (cardiology, cardiothoracic surgery) is not yet requested",
          "[Diagnosis] The working diagnosis is not documented in the current plan"}},
        {RoleKind::Nurse,
         "nursing priorities are close observation, fluid balance and line care",
         {},
         {"Vital signs and NEWS2 every hour until stable",
          "Strict intake and output with a urine output target of 0.5 mL/kg/h",
          "Inspect line and injection sites every shift"},
         {"[Monitoring] Observation frequency does not match the current NEWS2 band",
          "[Coordination] No nursing hand-off covers injection-site care"}},
        {RoleKind::Pharmacist,
         "medication review covers {case:medications} with creatinine {lab:creatinine}",
         {},
         {"Verify weight-based dosing of {case:first_medication}",
          "Adjust renally cleared drugs to the current creatinine of {lab:creatinine}",
          "Screen for interactions and nephrotoxic combinations"},
         {"[Treatment] Renal dose adjustment is not documented",
          "[Monitoring] Therapeutic drug monitoring levels are not scheduled"}},
        {RoleKind::SocialWorker,
         "social determinants: housing {sdoh:housing}, substance use {sdoh:substance_use}, insurance {sdoh:insurance}",
         {},
         {"{sdoh:referral}", "Confirm insurance status ({sdoh:insurance}) and medication coverage",
          "Identify a support contact: {sdoh:support}"},
         {"[Coordination] {sdoh:referral}", "[Treatment] {sdoh:substance_gap}"}},
        {RoleKind::PatientSafetyQI,
         "SEP-1 bundle compliance and hospital-acquired complication prevention need tracking",
         {},
         {"Track SEP-1 elements: lactate, cultures before antibiotics, antibiotics, fluids and repeat lactate",
          "Apply central line and catheter infection prevention bundles",
          "Screen for venous thromboembolism and pressure injury risk"},
         {"[Monitoring] SEP-1 repeat lactate timing is not documented",
          "[Coordination] The hospital-acquired infection prevention bundle has no assigned owner"}},
        {RoleKind::RiskPrediction,
         "NEWS2 total is {tool:news2_total} ({tool:news2_band} band) from the observation at {tool:observed_at}",
         {},
         {"{tool:recommendation}", "Recalculate NEWS2 at the next scheduled interval"},
         {"[Monitoring] Monitoring frequency must follow the {tool:news2_band} NEWS2 band: {tool:recommendation}"}},
    };
}

std::string_view mode_sentence(ConsultMode mode) {
    switch (mode) {
    case ConsultMode::TeamAssessment: return "Key concerns and recommendations from my role follow.";
    case ConsultMode::CareGap: return "Gaps in the current care plan ({case:current_plan}) are listed by category.";
    case ConsultMode::DifferentialDx: return "The differential below is ranked by likelihood.";
    case ConsultMode::TreatmentPlan: return "Immediate interventions and longer-term management follow.";
    case ConsultMode::AntibioticMgmt: return "Antimicrobial considerations for current orders ({case:medications}) follow.";
    case ConsultMode::PharmacyAssessment: return "Medication safety and monitoring considerations follow.";
    default: return "";
    }
}

std::string team_rule(const RoleContent& rc, ConsultMode mode) {
    std::ostringstream out;
    out << "ASSESSMENT:\n{variant:opening} " << rc.focus << ". " << mode_sentence(mode) << "\n";
    out << "DIFFERENTIAL:\n";
    for (size_t i = 0; i < rc.differential.size(); ++i) out << i + 1 << ". " << rc.differential[i] << "\n";
    out << "PLAN:\n";
    const auto& items = mode == ConsultMode::CareGap ? rc.gaps : rc.plan;
    for (auto item : items) out << "- " << item << "\n";
    if (mode == ConsultMode::AntibioticMgmt) out << "- Reassess antimicrobial spectrum at 48 to 72 hours with culture data\n";
    if (mode == ConsultMode::PharmacyAssessment) out << "- Reconcile home medications against current orders\n";
    out << "CLAIMS:\n{claims:record}\n";
    return out.str();
}

constexpr std::string_view kSynthesisRule =
    "FINAL DIAGNOSIS:\n{team:top_diagnosis}\n"
    "CONSENSUS:\n- {team:top_diagnosis}\n"
    "DIVERGENCE:\n"
    "CARE PLAN:\n{team:plan}\n"
    "NEXT STEPS:\n"
    "- Reassess vital signs and NEWS2 within one hour\n"
    "- Review culture and imaging results and narrow therapy\n"
    "- Confirm the plan with the human attending physician\n"
    "CLAIMS:\n{claims:record}\n";

constexpr std::string_view kSpecialistRule =
    "ASSESSMENT:\n{variant:opening} as the consulting {agent:specialty}, I reviewed this case of {case:chief_complaint}. "
    "The findings are consistent with {case:working_diagnosis}.\n"
    "DIFFERENTIAL:\n1. {case:working_diagnosis} | Consistent with the consult question and the record\n"
    "PLAN:\n"
    "- {agent:specialty} recommendations: review the imaging and cultures relevant to this consult\n"
    "- Reassess with the primary team within 24 hours or sooner if the patient deteriorates\n"
    "CLAIMS:\n{claims:record}\n";

constexpr std::string_view kNavigatorRule =
    "You are in the hospital because an infection has spread into your bloodstream and is affecting how your body "
    "works. Doctors call this sepsis. Your care team believes the cause is: {synthesis:final_diagnosis}.\n\n"
    "The team is giving you medicine through your vein to fight the infection. Nurses will check your heart rate, "
    "blood pressure and breathing often, and you will have more blood tests and a scan of your heart.\n\n"
    "A social worker will talk with you about housing, insurance and support after you leave the hospital. Please "
    "ask your nurse or doctor any time something is unclear.\n";

constexpr std::string_view kCaseManagerRule =
    "ASSESSMENT:\nDischarge planning for a {case:age}-year-old admitted with {case:chief_complaint}. Working diagnosis: "
    "{synthesis:final_diagnosis}.\n"
    "PLAN:\n"
    "- Home health needs: assess for outpatient parenteral antibiotic therapy and line care\n"
    "- Schedule primary care and specialist follow-up within 7 days of discharge\n"
    "- {sdoh:referral}\n"
    "CLAIMS:\n{claims:record}\n";

constexpr std::string_view kMalformedText =
    "The patient seems quite unwell and probably needs antibiotics and close observation, but I would want to look "
    "at more information before saying anything definite";

} // namespace

std::string MockScript::rule_key(const AgentRole& role, ConsultMode mode, CallKind kind) {
    return role.to_string() + "/" + (kind == CallKind::Synthesis ? std::string("Synthesis") : std::string(to_string(mode)));
}

const std::string* MockScript::find_rule(const AgentRole& role, ConsultMode mode, CallKind kind) const {
    if (auto it = rules.find(rule_key(role, mode, kind)); it != rules.end()) return &it->second;
    if (role.kind == RoleKind::Specialist) {
        const auto wildcard = "Specialist:*/" + std::string(kind == CallKind::Synthesis ? "Synthesis" : to_string(mode));
        if (auto it = rules.find(wildcard); it != rules.end()) return &it->second;
    }
    return nullptr;
}

MockScript MockScript::default_script() {
    MockScript script;
    for (const auto& rc : default_role_content()) {
        const AgentRole role{rc.kind, {}};
        for (int m = 0; m <= static_cast<int>(ConsultMode::PharmacyAssessment); ++m) {
            const auto mode = static_cast<ConsultMode>(m);
            script.rules[rule_key(role, mode, CallKind::TeamMember)] = team_rule(rc, mode);
        }
    }
    script.rules[rule_key({RoleKind::SeniorPhysician, {}}, ConsultMode::TeamAssessment, CallKind::Synthesis)] =
        std::string(kSynthesisRule);
    script.rules["Specialist:*/SpecialistConsult"] = std::string(kSpecialistRule);
    script.rules[rule_key({RoleKind::PatientNavigator, {}}, ConsultMode::NavigatorExplain, CallKind::TeamMember)] =
        std::string(kNavigatorRule);
    script.rules[rule_key({RoleKind::CaseManager, {}}, ConsultMode::DischargeSummary, CallKind::TeamMember)] =
        std::string(kCaseManagerRule);
    return script;
}

FaultInjection parse_fault(std::string_view spec) {
    std::vector<std::string> parts;
    size_t start = 0;
    // Role names may contain ':' ("Specialist:Cardiologist"), so split the
    // fixed fields from the ends.
    for (size_t at; (at = spec.find(':', start)) != std::string_view::npos; start = at + 1) {
        parts.emplace_back(spec.substr(start, at - start));
    }
    parts.emplace_back(spec.substr(start));
    const auto bad = [&] { return Error("BadFault", "unrecognized fault spec '" + std::string(spec) + "'"); };
    if (parts.size() < 2) throw bad();
    auto join = [&](size_t from, size_t to) {
        std::string s;
        for (size_t i = from; i < to; ++i) s += (i > from ? ":" : "") + parts[i];
        return s;
    };
    FaultInjection f;
    if (parts[0] == "timeout" || parts[0] == "malformed") {
        f.kind = parts[0] == "timeout" ? FaultKind::Timeout : FaultKind::MalformedOutput;
        f.target = AgentRole::parse(join(1, parts.size()));
        return f;
    }
    if (parts[0] == "fabricate" && parts.size() >= 5) {
        f.kind = FaultKind::FabricateValue;
        const size_t n = parts.size();
        f.target = AgentRole::parse(join(1, n - 3));
        f.subject = enum_from_string<ClaimSubject>(parts[n - 3]);
        f.field = parts[n - 2];
        const auto delta = text::parse_number(parts[n - 1]);
        if (!delta) throw bad();
        f.delta = *delta;
        return f;
    }
    throw bad();
}

MockBackend::MockBackend(MockScript script, std::uint64_t seed) : script_(std::move(script)), seed_(seed) {}

CompletionResult MockBackend::complete(const CompletionRequest& req) const {
    req.validate();
    const auto key = MockScript::rule_key(req.role, req.mode, req.kind);

    std::int64_t latency = 0;
    if (auto it = script_.latency_ms.find(req.role.to_string()); it != script_.latency_ms.end()) {
        latency = it->second;
    } else {
        latency = 200 + static_cast<std::int64_t>(text::fnv1a(key, seed_) % 800);
    }
    auto wait = [&](std::int64_t ms) {
        if (script_.realtime) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };

    const FaultInjection* fault = nullptr;
    for (const auto& f : script_.faults) {
        if (f.target == req.role) fault = &f;
    }

    CompletionResult result;
    if ((fault && fault->kind == FaultKind::Timeout) || latency > req.timeout_ms) {
        wait(req.timeout_ms);
        result.status = CompletionStatus::TimedOut;
        result.latency_ms = req.timeout_ms;
        result.error = "agent did not answer within " + std::to_string(req.timeout_ms) + " ms";
        return result;
    }

    const auto* rule = script_.find_rule(req.role, req.mode, req.kind);
    if (rule == nullptr) {
        result.status = CompletionStatus::BackendError;
        result.error = "mock script has no rule for " + key;
        result.latency_ms = 0;
        return result;
    }

    const auto view = read_prompt(req.user_prompt);
    const Expander expander{view, req, seed_};
    result.text = expander.expand(*rule);

    if (fault && fault->kind == FaultKind::MalformedOutput) result.text = std::string(kMalformedText);
    if (fault && fault->kind == FaultKind::FabricateValue && req.kind == CallKind::TeamMember) {
        result.text = fabricate(result.text, *fault, view, req.role);
    }

    wait(latency);
    result.latency_ms = latency;
    result.status = CompletionStatus::Ok;
    return result;
}

} // namespace matec::llm
