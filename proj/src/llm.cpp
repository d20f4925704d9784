#include "matec/llm.hpp"

#include <cctype>
#include <optional>

#include "matec/error.hpp"
#include "matec/text.hpp"

namespace matec::llm {

void CompletionRequest::validate() const {
    if (timeout_ms <= 0) throw Error("BadRequest", "timeout_ms must be > 0");
    if (text::trim(system_prompt).empty() || text::trim(user_prompt).empty()) {
        throw Error("BadRequest", "prompts must be nonempty");
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw Error("BadRequest", "temperature must be within [0, 2]");
    if (max_tokens <= 0) throw Error("BadRequest", "max_tokens must be > 0");
}

std::string_view to_string(CompletionStatus s) {
    switch (s) {
    case CompletionStatus::Ok: return "Ok";
    case CompletionStatus::TimedOut: return "TimedOut";
    case CompletionStatus::BackendError: return "BackendError";
    case CompletionStatus::MalformedResponse: return "MalformedResponse";
    }
    return "?";
}

namespace {

enum class Section { None, Assessment, Differential, Plan, Claims };

// Recognizes "ASSESSMENT:", "## Plan", "**Claims:**" and friends. On a match
// returns the section and any inline text after the colon.
std::optional<std::pair<Section, std::string_view>> heading(std::string_view line) {
    auto s = text::trim(line);
    while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
    s = text::trim(s);
    struct Name {
        std::string_view word;
        Section section;
    };
    static constexpr Name names[] = {{"ASSESSMENT", Section::Assessment},
                                     {"DIFFERENTIAL DIAGNOSIS", Section::Differential},
                                     {"DIFFERENTIAL", Section::Differential},
                                     {"PLAN", Section::Plan},
                                     {"CLAIMS", Section::Claims}};
    for (const auto& n : names) {
        if (!text::starts_with_ci(s, n.word)) continue;
        auto rest = s.substr(n.word.size());
        while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
        if (rest.empty()) return std::pair{n.section, std::string_view{}};
        if (rest.front() != ':') continue;
        rest.remove_prefix(1);
        while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
        return std::pair{n.section, text::trim(rest)};
    }
    return std::nullopt;
}

std::optional<ClaimSubject> subject_from(std::string_view s) {
    const auto l = text::lower(text::trim(s));
    if (l == "vital") return ClaimSubject::Vital;
    if (l == "lab") return ClaimSubject::Lab;
    if (l == "medication") return ClaimSubject::Medication;
    if (l == "historyfact" || l == "history") return ClaimSubject::HistoryFact;
    return std::nullopt;
}

std::optional<Claim> claim_line(std::string_view line, const AgentRole& role) {
    auto s = text::trim(line);
    if (!text::starts_with_ci(s, "CLAIM:")) return std::nullopt;
    s = text::trim(s.substr(6));
    const auto p1 = s.find('|');
    if (p1 == std::string_view::npos) return std::nullopt;
    const auto p2 = s.find('|', p1 + 1);
    if (p2 == std::string_view::npos) return std::nullopt;
    const auto subject = subject_from(s.substr(0, p1));
    const auto name = text::trim(s.substr(p1 + 1, p2 - p1 - 1));
    const auto value = text::trim(s.substr(p2 + 1));
    if (!subject || name.empty() || value.empty()) return std::nullopt;
    return Claim::make(*subject, std::string(name), std::string(value), role);
}

DiagnosisItem diagnosis_line(std::string_view line) {
    const auto s = strip_list_marker(line);
    for (std::string_view sep : {std::string_view(" | "), std::string_view("|"), std::string_view(" -- ")}) {
        if (const auto at = s.find(sep); at != std::string_view::npos) {
            return {std::string(text::trim(s.substr(0, at))), std::string(text::trim(s.substr(at + sep.size())))};
        }
    }
    return {std::string(s), {}};
}

} // namespace

std::string_view strip_list_marker(std::string_view line) {
    auto s = text::trim(line);
    if (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '+')) return text::trim(s.substr(1));
    size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
        return text::trim(s.substr(digits + 1));
    }
    return s;
}

ParsedResponse parse_structured(std::string_view input, const AgentRole& role) {
    ParsedResponse out;
    Section current = Section::None;
    bool saw_assessment = false;
    std::string assessment;

    for (auto line : text::split_lines(input)) {
        if (auto h = heading(line)) {
            current = h->first;
            if (current == Section::Assessment) {
                saw_assessment = true;
                if (!h->second.empty()) assessment.append(h->second);
            }
            continue;
        }
        // CLAIM lines count wherever they appear.
        if (auto c = claim_line(line, role)) {
            out.sections.claims.push_back(std::move(*c));
            continue;
        }
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        switch (current) {
        case Section::Assessment:
            if (!assessment.empty()) assessment.push_back('\n');
            assessment.append(trimmed);
            break;
        case Section::Differential: {
            auto d = diagnosis_line(trimmed);
            if (!d.condition.empty()) out.sections.differential.push_back(std::move(d));
            break;
        }
        case Section::Plan: {
            const auto item = strip_list_marker(trimmed);
            if (!item.empty()) out.sections.plan.emplace_back(item);
            break;
        }
        case Section::Claims:
        case Section::None:
            break;
        }
    }
    out.sections.assessment = std::string(text::trim(assessment));
    out.status = saw_assessment && !out.sections.assessment.empty() ? ResponseStatus::Ok : ResponseStatus::Malformed;
    return out;
}

std::string render_structured(const StructuredResponse& r) {
    std::string out = "ASSESSMENT:\n" + r.assessment + "\nDIFFERENTIAL:\n";
    for (size_t i = 0; i < r.differential.size(); ++i) {
        out += std::to_string(i + 1) + ". " + r.differential[i].condition;
        if (!r.differential[i].reasoning.empty()) out += " | " + r.differential[i].reasoning;
        out += '\n';
    }
    out += "PLAN:\n";
    for (const auto& p : r.plan) out += "- " + p + '\n';
    out += "CLAIMS:\n";
    for (const auto& c : r.claims) {
        out += "CLAIM: " + std::string(to_string(c.subject)) + '|' + c.name + '|' + c.asserted_value + '\n';
    }
    return out;
}

std::string strip_claim_lines(std::string_view input) {
    std::string out;
    for (auto line : text::split_lines(input)) {
        const auto t = text::trim(line);
        if (text::starts_with_ci(t, "CLAIM:")) continue;
        if (auto h = heading(line); h && h->first == Section::Claims) continue;
        out.append(line);
        out.push_back('\n');
    }
    while (out.size() >= 2 && out[out.size() - 1] == '\n' && out[out.size() - 2] == '\n') out.pop_back();
    return out;
}

} // namespace matec::llm
