#include "matec/orchestrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "matec/case_model.hpp"
#include "matec/error.hpp"
#include "matec/news.hpp"
#include "matec/text.hpp"

namespace matec {

namespace {

constexpr std::string_view kSynthesisInstruction =
    "SYNTHESIS FORMAT:\n"
    "Merge the team inputs below into one report with these headings, in order:\n"
    "FINAL DIAGNOSIS: <one line>\n"
    "CONSENSUS: one '- ' line per diagnosis most of the team agrees on\n"
    "DIVERGENCE: one '- <topic>: <Role>=<position>; <Role>=<position>' line per disagreement\n"
    "CARE PLAN: one '- ' line per action\n"
    "NEXT STEPS: one '- ' line per action\n"
    "CLAIMS: one 'CLAIM: <Vital|Lab|Medication|HistoryFact>|<name>|<value>' line per fact you restate from the record";

constexpr std::string_view kNavigatorQuestion =
    "Explain the care team's findings and plan to the patient in plain language.";
constexpr std::string_view kDischargeQuestion =
    "Identify barriers to discharge and home health service needs for this patient.";

ResponseStatus to_response_status(llm::CompletionStatus s) {
    switch (s) {
    case llm::CompletionStatus::Ok: return ResponseStatus::Ok;
    case llm::CompletionStatus::TimedOut: return ResponseStatus::TimedOut;
    case llm::CompletionStatus::MalformedResponse: return ResponseStatus::Malformed;
    case llm::CompletionStatus::BackendError: return ResponseStatus::BackendError;
    }
    return ResponseStatus::BackendError;
}

std::vector<const AgentResponse*> ok_doctors(std::span<const AgentResponse> responses) {
    std::vector<const AgentResponse*> out;
    for (const auto& r : responses) {
        if (r.status == ResponseStatus::Ok && r.role.is_doctor() && !r.sections.differential.empty()) out.push_back(&r);
    }
    if (out.empty()) {
        for (const auto& r : responses) {
            if (r.status == ResponseStatus::Ok && !r.sections.differential.empty()) out.push_back(&r);
        }
    }
    return out;
}

bool contains_normalized(const std::vector<std::string>& items, std::string_view candidate) {
    const auto n = text::normalize(candidate);
    return std::any_of(items.begin(), items.end(), [&](const auto& s) { return text::normalize(s) == n; });
}

std::string section_key(std::string_view line, std::string* rest) {
    static constexpr std::string_view headings[] = {"FINAL DIAGNOSIS", "CONSENSUS", "DIVERGENCE", "CARE PLAN",
                                                    "NEXT STEPS", "CLAIMS"};
    std::string_view s = line;
    while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_' || s.front() == ' ')) s.remove_prefix(1);
    for (auto h : headings) {
        if (!text::starts_with_ci(s, h)) continue;
        auto after = s.substr(h.size());
        while (!after.empty() && (after.front() == '*' || after.front() == '_')) after.remove_prefix(1);
        if (after.empty() || after.front() != ':') continue;
        after.remove_prefix(1);
        while (!after.empty() && (after.front() == '*' || after.front() == '_')) after.remove_prefix(1);
        if (rest) *rest = std::string(text::trim(after));
        return std::string(h);
    }
    return {};
}

std::optional<DivergenceTopic> parse_divergence_line(std::string_view line) {
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    DivergenceTopic topic;
    topic.topic = std::string(text::trim(line.substr(0, colon)));
    auto rest = line.substr(colon + 1);
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const auto part = text::trim(rest.substr(0, semi));
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
        const auto eq = part.find('=');
        if (eq == std::string_view::npos) continue;
        try {
            topic.positions[AgentRole::parse(text::trim(part.substr(0, eq)))] = std::string(text::trim(part.substr(eq + 1)));
        } catch (const Error&) {
            // Positions attributed to unknown roles are dropped.
        }
    }
    if (topic.topic.empty()) return std::nullopt;
    return topic;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct RecordValue {
    bool found = false;
    std::optional<double> number;
    std::string text;
};

RecordValue vital_value(const VitalSigns& v, const std::string& name) {
    auto num = [](double d) { return RecordValue{true, d, text::format_number(d)}; };
    if (name == "temperature") return num(v.temperature.degrees());
    if (name == "heart_rate") return num(v.heart_rate);
    if (name == "respiration_rate") return num(v.respiration_rate);
    if (name == "systolic_bp") return num(v.systolic_bp);
    if (name == "spo2") return num(v.spo2);
    if (name == "consciousness") return {true, std::nullopt, std::string(to_string(v.consciousness))};
    if (name == "on_supplemental_oxygen") return {true, std::nullopt, v.on_supplemental_oxygen ? "yes" : "no"};
    return {};
}

bool values_agree(const Claim& claim, const RecordValue& record) {
    if (record.number) {
        if (!claim.numeric_value) return false;
        const double tolerance = std::max(0.02 * std::fabs(*record.number), 0.1);
        return std::fabs(*claim.numeric_value - *record.number) <= tolerance;
    }
    return text::normalize(claim.asserted_value) == text::normalize(record.text);
}

std::string canonical_name(std::string_view name) {
    auto n = text::normalize(name);
    std::replace(n.begin(), n.end(), ' ', '_');
    return n;
}

} // namespace

// ------------------------------------------------------------------ helpers

Instant record_time(const PatientCase& c) {
    if (c.vitals.empty()) throw Error("AsOfBeforeAllData", "case " + c.case_id + " has no vitals");
    return c.vitals.back().timestamp;
}

std::string canonical_vital_name(std::string_view name) {
    static const std::map<std::string, std::string> aliases{
        {"hr", "heart_rate"},        {"pulse", "heart_rate"},          {"heart_rate", "heart_rate"},
        {"temp", "temperature"},     {"temperature", "temperature"},   {"rr", "respiration_rate"},
        {"respiratory_rate", "respiration_rate"}, {"respiration_rate", "respiration_rate"},
        {"sbp", "systolic_bp"},      {"systolic_blood_pressure", "systolic_bp"}, {"systolic_bp", "systolic_bp"},
        {"systolic_pressure", "systolic_bp"},     {"spo2", "spo2"},    {"o2_sat", "spo2"},
        {"oxygen_saturation", "spo2"}, {"sao2", "spo2"},               {"consciousness", "consciousness"},
        {"avpu", "consciousness"},   {"on_supplemental_oxygen", "on_supplemental_oxygen"},
        {"supplemental_oxygen", "on_supplemental_oxygen"},
    };
    const auto n = canonical_name(name);
    if (auto it = aliases.find(n); it != aliases.end()) return it->second;
    return n;
}

std::vector<std::string> discharge_barriers(const SocialDeterminants& s) {
    std::vector<std::string> out;
    if (s.housing != Housing::Stable) {
        out.push_back(s.housing == Housing::Unknown ? "housing: status not documented"
                                                    : "housing: " + text::lower(to_string(s.housing)));
    }
    if (s.substance_use == SubstanceUse::Active) out.emplace_back("substance use: active");
    if (s.insurance == Insurance::Uninsured) out.emplace_back("insurance: uninsured");
    return out;
}

// ------------------------------------------------------------------ consensus

std::vector<std::string> mechanical_consensus(std::span<const AgentResponse> responses) {
    const auto doctors = ok_doctors(responses);
    if (doctors.empty()) return {};
    if (doctors.size() == 1) return {doctors.front()->sections.differential.front().condition};

    struct Tally {
        std::string label;
        std::string norm;
        std::size_t count = 0;
    };
    std::vector<Tally> tallies;
    for (const auto* r : doctors) {
        std::vector<std::string> seen;
        for (const auto& d : r->sections.differential) {
            const auto n = text::normalize(d.condition);
            if (n.empty() || std::find(seen.begin(), seen.end(), n) != seen.end()) continue;
            seen.push_back(n);
            auto it = std::find_if(tallies.begin(), tallies.end(), [&](const Tally& t) { return t.norm == n; });
            if (it == tallies.end()) {
                tallies.push_back({d.condition, n, 1});
            } else {
                ++it->count;
            }
        }
    }
    const std::size_t threshold = (doctors.size() + 1) / 2;
    std::stable_sort(tallies.begin(), tallies.end(), [](const Tally& a, const Tally& b) { return a.count > b.count; });
    std::vector<std::string> out;
    for (const auto& t : tallies) {
        if (t.count >= threshold) out.push_back(t.label);
    }
    return out;
}

std::optional<DivergenceTopic> mechanical_divergence(std::span<const AgentResponse> responses) {
    const auto doctors = ok_doctors(responses);
    if (doctors.size() < 2) return std::nullopt;
    DivergenceTopic topic{"Most likely diagnosis", {}};
    std::vector<std::string> distinct;
    for (const auto* r : doctors) {
        const auto& top = r->sections.differential.front().condition;
        topic.positions[r->role] = top;
        if (!contains_normalized(distinct, top)) distinct.push_back(top);
    }
    if (distinct.size() < 2) return std::nullopt;
    return topic;
}

// ------------------------------------------------------------------ synthesis text

SynthesisReport parse_synthesis(std::string_view body, const AgentRole& role) {
    SynthesisReport s;
    std::string current;
    for (auto raw : text::split_lines(body)) {
        const auto line = text::trim(raw);
        std::string rest;
        if (auto key = section_key(line, &rest); !key.empty()) {
            current = key;
            if (!rest.empty() && current == "FINAL DIAGNOSIS") s.final_diagnosis = rest;
            continue;
        }
        if (line.empty() || text::starts_with_ci(line, "CLAIM:")) continue;
        const auto item = std::string(text::trim(llm::strip_list_marker(line)));
        if (item.empty()) continue;
        if (current == "FINAL DIAGNOSIS") {
            if (s.final_diagnosis.empty()) s.final_diagnosis = item;
        } else if (current == "CONSENSUS") {
            s.consensus.push_back(item);
        } else if (current == "DIVERGENCE") {
            if (auto topic = parse_divergence_line(item)) s.divergence.push_back(std::move(*topic));
        } else if (current == "CARE PLAN") {
            s.care_plan.push_back(item);
        } else if (current == "NEXT STEPS") {
            s.next_steps.push_back(item);
        }
    }
    // CLAIM lines are recognised anywhere; reuse the response parser for them.
    s.claims = llm::parse_structured("ASSESSMENT: synthesis\n" + std::string(body), role).sections.claims;
    return s;
}

std::string render_synthesis(const SynthesisReport& s) {
    std::ostringstream out;
    out << "FINAL DIAGNOSIS: " << s.final_diagnosis << '\n';
    out << "CONSENSUS:\n";
    for (const auto& c : s.consensus) out << "- " << c << '\n';
    out << "DIVERGENCE:\n";
    for (const auto& d : s.divergence) {
        out << "- " << d.topic << ':';
        bool first = true;
        for (const auto& [role, position] : d.positions) {
            out << (first ? " " : "; ") << role.to_string() << '=' << position;
            first = false;
        }
        out << '\n';
    }
    out << "CARE PLAN:\n";
    for (const auto& c : s.care_plan) out << "- " << c << '\n';
    out << "NEXT STEPS:\n";
    for (const auto& c : s.next_steps) out << "- " << c << '\n';
    return out.str();
}

// ------------------------------------------------------------------ verification

VerificationReport verify(const SynthesisReport* synthesis, std::span<const AgentResponse> responses,
                          const PatientCase& c, std::span<const RetrievedChunk> context, Instant as_of) {
    std::vector<const Claim*> claims;
    for (const auto& r : responses) {
        if (r.status != ResponseStatus::Ok) continue;
        for (const auto& cl : r.sections.claims) claims.push_back(&cl);
    }
    if (synthesis) {
        for (const auto& cl : synthesis->claims) claims.push_back(&cl);
    }

    const VitalSigns* vitals = latest_vitals(c, as_of);
    std::string haystack = text::normalize(c.history);
    for (const auto& rc : context) haystack += "\n" + text::normalize(rc.chunk.text);

    VerificationReport report;
    report.checked = static_cast<int>(claims.size());
    for (const auto* claim : claims) {
        RecordValue record;
        switch (claim->subject) {
        case ClaimSubject::Vital:
            if (vitals) record = vital_value(*vitals, canonical_vital_name(claim->name));
            break;
        case ClaimSubject::Lab: {
            const LabResult* latest = nullptr;
            const auto wanted = canonical_name(claim->name);
            for (const auto& l : c.labs) {
                if (canonical_name(l.name) != wanted) continue;
                if (!latest || l.timestamp >= latest->timestamp) latest = &l;
            }
            if (latest) record = {true, latest->value, text::format_number(latest->value)};
            break;
        }
        case ClaimSubject::Medication: {
            const auto wanted = canonical_name(claim->name);
            std::vector<const MedicationOrder*> orders;
            for (const auto& m : c.medications) {
                if (canonical_name(m.name) == wanted) orders.push_back(&m);
            }
            if (orders.empty()) break;
            record = {true, orders.front()->dose, text::format_number(orders.front()->dose)};
            for (const auto* m : orders) {
                const RecordValue candidate{true, m->dose, text::format_number(m->dose)};
                if (values_agree(*claim, candidate)) record = candidate;
            }
            break;
        }
        case ClaimSubject::HistoryFact: {
            const auto needle = text::normalize(claim->asserted_value);
            if (needle.empty() || haystack.find(needle) == std::string::npos) {
                report.flags.push_back({*claim, FlagReason::UnsupportedByContext, std::nullopt});
            }
            continue;
        }
        }
        if (!record.found) {
            report.flags.push_back({*claim, FlagReason::NotInRecord, std::nullopt});
        } else if (!values_agree(*claim, record)) {
            report.flags.push_back({*claim, FlagReason::ValueMismatch, record.text});
        }
    }
    report.verdict = report.flags.empty() ? Verdict::Clean : Verdict::Flagged;
    return report;
}

// ------------------------------------------------------------------ gaps

GapCategory categorize_gap(std::string_view finding, std::string* stripped) {
    auto body = text::trim(finding);
    if (body.starts_with('[')) {
        if (const auto close = body.find(']'); close != std::string_view::npos) {
            const auto tag = text::trim(body.substr(1, close - 1));
            for (auto cat : {GapCategory::Diagnosis, GapCategory::Treatment, GapCategory::Monitoring, GapCategory::Coordination}) {
                if (text::lower(tag) == text::lower(to_string(cat))) {
                    if (stripped) *stripped = std::string(text::trim(body.substr(close + 1)));
                    return cat;
                }
            }
        }
    }
    if (stripped) *stripped = std::string(body);
    const auto l = text::lower(body);
    auto any = [&](std::initializer_list<std::string_view> words) {
        return std::any_of(words.begin(), words.end(), [&](auto w) { return l.find(w) != std::string::npos; });
    };
    if (any({"diagnos", "culture", "imaging", "echocardiogra", "workup", "work-up", "biopsy"})) return GapCategory::Diagnosis;
    if (any({"monitor", "vital", "news2", "observation", "trend", "level", "lactate"})) return GapCategory::Monitoring;
    if (any({"antibiotic", "antimicrobial", "dose", "dosing", "therapy", "treatment", "medication", "fluid"})) {
        return GapCategory::Treatment;
    }
    return GapCategory::Coordination;
}

namespace {

void add_finding(GapReport& report, GapCategory cat, const std::string& finding, const std::set<AgentRole>& roles) {
    auto& list = report.categories[cat];
    const auto norm = text::normalize(finding);
    auto it = std::find_if(list.begin(), list.end(), [&](const GapFinding& f) { return text::normalize(f.finding) == norm; });
    if (it == list.end()) {
        list.push_back({finding, roles});
    } else {
        it->raised_by.insert(roles.begin(), roles.end());
    }
}

GapReport finish(GapReport report) {
    std::size_t total = 0;
    std::ostringstream parts;
    bool first = true;
    for (auto cat : {GapCategory::Diagnosis, GapCategory::Treatment, GapCategory::Monitoring, GapCategory::Coordination}) {
        const auto n = report.categories[cat].size();
        total += n;
        parts << (first ? "" : ", ") << n << ' ' << to_string(cat);
        first = false;
    }
    report.summary = std::to_string(total) + (total == 1 ? " care gap: " : " care gaps: ") + parts.str();
    return report;
}

} // namespace

GapReport aggregate_gaps(std::span<const AgentResponse> responses) {
    GapReport report;
    for (const auto& r : responses) {
        if (r.status != ResponseStatus::Ok) continue;
        for (const auto& item : r.sections.plan) {
            std::string finding;
            const auto cat = categorize_gap(item, &finding);
            if (text::normalize(finding).empty()) continue;
            add_finding(report, cat, finding, {r.role});
        }
    }
    return finish(std::move(report));
}

GapReport merge_gap_reports(std::span<const GapReport> reports) {
    GapReport merged;
    for (const auto& r : reports) {
        for (const auto& [cat, findings] : r.categories) {
            for (const auto& f : findings) add_finding(merged, cat, f.finding, f.raised_by);
        }
    }
    return finish(std::move(merged));
}

// ------------------------------------------------------------------ orchestrator

Orchestrator::Orchestrator(const Registry& registry, const llm::CompletionBackend& backend, const VectorStore* store,
                           OrchestratorConfig config)
    : registry_(registry), backend_(backend), store_(store), config_(std::move(config)) {
    if (config_.parallelism < 1) throw Error("BadConfig", "parallelism must be at least 1");
    if (config_.agent_timeout_ms <= 0) throw Error("BadConfig", "agent timeout must be positive");
    if (!config_.clock) {
        config_.clock = [] { return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()); };
    }
}

std::string Orchestrator::next_id(std::string_view seed_text) const {
    const auto n = counter_.fetch_add(1);
    return "tx-" + hex16(text::fnv1a(std::string(seed_text) + "#" + std::to_string(n)));
}

std::vector<RetrievedChunk> Orchestrator::retrieve(const PatientCase& c, std::string_view question) const {
    if (store_ == nullptr || store_->size() == 0 || config_.retrieval_k < 1) return {};
    return store_->query(std::string(question) + "\n" + c.chief_complaint, config_.retrieval_k);
}

llm::CompletionResult Orchestrator::call(const AgentProfile& profile, std::string system_prompt,
                                         std::string user_prompt, ConsultMode mode, llm::CallKind kind) const {
    llm::CompletionRequest req;
    req.system_prompt = std::move(system_prompt);
    req.user_prompt = std::move(user_prompt);
    req.role = profile.role;
    req.mode = mode;
    req.kind = kind;
    req.temperature = profile.temperature;
    req.timeout_ms = config_.agent_timeout_ms;
    req.request_id = profile.role.to_string() + "/" + std::string(to_string(mode));
    return backend_.complete(req);
}

std::vector<AgentResponse> Orchestrator::fan_out(std::span<const AgentProfile* const> team, const PatientCase& c,
                                                 const std::string& user_prompt, ConsultMode mode,
                                                 Instant as_of) const {
    std::vector<AgentResponse> out(team.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < team.size();) {
            const auto& profile = *team[i];
            auto prompt = user_prompt;
            if (profile.role.kind == RoleKind::RiskPrediction) {
                if (const auto* v = latest_vitals(c, as_of)) {
                    const auto news = news::compute_news(*v);
                    prompt += std::string(kToolMarker) + "\n  tool: news2\n  news2_total: " + std::to_string(news.total) +
                              "\n  news2_band: " + std::string(news::to_string(news.band)) +
                              "\n  observed_at: " + format_instant(v->timestamp) +
                              "\n  recommendation: " + std::string(news::recommendation_for(news.band)) + "\n";
                }
            }
            AgentResponse response;
            response.role = profile.role;
            try {
                const auto result = call(profile, build_system_prompt(profile), std::move(prompt), mode,
                                         llm::CallKind::TeamMember);
                response.latency_ms = result.latency_ms;
                response.status = to_response_status(result.status);
                if (result.status == llm::CompletionStatus::Ok) {
                    auto parsed = llm::parse_structured(result.text, profile.role);
                    response.status = parsed.status;
                    if (parsed.status == ResponseStatus::Ok) response.sections = std::move(parsed.sections);
                } else {
                    spdlog::warn("{} returned {}: {}", profile.role.to_string(), llm::to_string(result.status), result.error);
                }
            } catch (const std::exception& e) {
                spdlog::warn("{} call failed: {}", profile.role.to_string(), e.what());
                response.status = ResponseStatus::BackendError;
            }
            out[i] = std::move(response);
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.parallelism), team.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    pool.clear();
    return out;
}

namespace {

bool has_synthesis_heading(std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        if (text::starts_with_ci(text::trim(text.substr(pos, end - pos)), "FINAL DIAGNOSIS")) return true;
        pos = end + 1;
    }
    return false;
}

} // namespace

SynthesisReport Orchestrator::synthesize(std::span<const AgentResponse> responses, const PatientCase& c,
                                         std::string_view question, std::span<const RetrievedChunk> context) const {
    std::vector<AgentResponse> fed;
    for (const auto& r : responses) {
        if (r.status != ResponseStatus::Ok) continue;
        if (!config_.synthesis_includes_all_roles && !r.role.is_doctor()) continue;
        fed.push_back(r);
    }
    if (fed.empty()) throw Error("SynthesisBackendFailure", "no Ok responses to synthesize");

    const auto& senior = registry_.profile({RoleKind::SeniorPhysician, {}});
    std::string prompt = build_user_prompt(c, question, context, record_time(c));
    prompt += std::string(kTeamInputsMarker) + "\n";
    for (const auto& r : fed) prompt += "--- " + r.role.to_string() + " ---\n" + llm::render_structured(r.sections);
    const auto system = build_system_prompt(senior) + "\n\n" + std::string(kSynthesisInstruction);

    // One retry on a backend error or unparseable output; a timeout is final.
    llm::CompletionResult result;
    bool malformed = false;
    for (int attempt = 0; attempt < 2; ++attempt) {
        result = call(senior, system, prompt, ConsultMode::TeamAssessment, llm::CallKind::Synthesis);
        malformed = result.status == llm::CompletionStatus::Ok && !has_synthesis_heading(result.text);
        if ((result.status == llm::CompletionStatus::Ok && !malformed) || result.status == llm::CompletionStatus::TimedOut) {
            break;
        }
    }
    if (malformed) throw Error("SynthesisBackendFailure", "senior physician synthesis failed: output has no FINAL DIAGNOSIS");
    if (result.status != llm::CompletionStatus::Ok) {
        throw Error("SynthesisBackendFailure",
                    "senior physician synthesis failed: " + std::string(llm::to_string(result.status)) + " " + result.error);
    }

    auto report = parse_synthesis(result.text, senior.role);
    for (const auto& consensus : mechanical_consensus(fed)) {
        if (!contains_normalized(report.consensus, consensus)) report.consensus.push_back(consensus);
    }
    if (auto topic = mechanical_divergence(fed)) {
        const bool present = std::any_of(report.divergence.begin(), report.divergence.end(), [&](const auto& d) {
            return text::normalize(d.topic) == text::normalize(topic->topic);
        });
        if (!present) report.divergence.push_back(std::move(*topic));
    }
    if (report.final_diagnosis.empty() && !report.consensus.empty()) report.final_diagnosis = report.consensus.front();
    for (const auto& r : fed) report.contributing_roles.insert(r.role);
    return report;
}

Transcript Orchestrator::run_consultation(const PatientCase& c, std::string question, ConsultMode mode,
                                          const RunOptions& options) const {
    if (!is_team_mode(mode)) {
        throw Error("BadMode", std::string(to_string(mode)) + " is not a team consultation mode");
    }
    if (const auto violations = validate_case(c); !violations.empty()) {
        throw Error("InvalidCase", violations.front().path + ": " + violations.front().message);
    }
    if (text::trim(question).empty()) question = registry_.instantiate_template(mode, c);

    std::vector<const AgentProfile*> team;
    if (options.team.empty()) {
        team = registry_.team(Team::CoreSepsis);
    } else {
        for (const auto& role : options.team) {
            const auto* p = &registry_.profile(role);
            if (std::find(team.begin(), team.end(), p) == team.end()) team.push_back(p);
        }
    }
    if (team.empty()) throw Error("NoAgentsAvailable", "the selected team is empty");

    const auto as_of = record_time(c);
    const auto context = retrieve(c, question);
    auto prompt = build_user_prompt(c, question, context, as_of);
    if (options.prior && options.prior->synthesis) {
        prompt += std::string(kPriorMarker) + "\n" + render_synthesis(*options.prior->synthesis);
    }

    Transcript t;
    t.transcript_id = options.transcript_id.empty()
                          ? next_id(c.case_id + "|" + std::string(to_string(mode)) + "|" + question)
                          : options.transcript_id;
    t.case_id = c.case_id;
    t.question = question;
    t.mode = mode;
    t.created_at = config_.clock();
    if (options.prior) t.followup_of = options.prior->transcript_id;
    t.responses = fan_out(team, c, prompt, mode, as_of);

    const auto ok_doctor_count = std::count_if(t.responses.begin(), t.responses.end(), [](const AgentResponse& r) {
        return r.status == ResponseStatus::Ok && r.role.is_doctor();
    });
    if (ok_doctor_count >= 2) {
        t.synthesis = synthesize(t.responses, c, question, context);
    } else {
        t.degraded_team = true;
        spdlog::warn("consultation {}: only {} doctor responses, synthesis skipped", t.transcript_id, ok_doctor_count);
    }
    t.verification = verify(t.synthesis ? &*t.synthesis : nullptr, t.responses, c, context, as_of);
    if (mode == ConsultMode::CareGap) t.gap_report = aggregate_gaps(t.responses);
    return t;
}

Transcript Orchestrator::consult_specialist(std::string_view specialty, const PatientCase& c, std::string question,
                                            const std::string& transcript_id) const {
    const auto& profile = registry_.specialist(specialty);
    if (const auto violations = validate_case(c); !violations.empty()) {
        throw Error("InvalidCase", violations.front().path + ": " + violations.front().message);
    }
    if (text::trim(question).empty()) question = "Provide your specialty consult on this patient.";
    const auto as_of = record_time(c);
    const auto context = retrieve(c, question);

    Transcript t;
    t.transcript_id = transcript_id.empty() ? next_id(c.case_id + "|consult|" + profile.role.to_string() + "|" + question)
                                            : transcript_id;
    t.case_id = c.case_id;
    t.question = question;
    t.mode = ConsultMode::SpecialistConsult;
    t.created_at = config_.clock();

    const std::array<const AgentProfile*, 1> team{&profile};
    t.responses = fan_out(team, c, build_user_prompt(c, question, context, as_of), ConsultMode::SpecialistConsult, as_of);
    t.verification = verify(nullptr, t.responses, c, context, as_of);
    return t;
}

std::string Orchestrator::navigator_explain(const PatientCase& c, const Transcript& t) const {
    if (!t.synthesis) throw Error("MissingSynthesis", "transcript " + t.transcript_id + " has no synthesis");
    const auto& profile = registry_.profile({RoleKind::PatientNavigator, {}});
    auto prompt = build_user_prompt(c, kNavigatorQuestion, {}, record_time(c));
    prompt += std::string(kSynthesisMarker) + "\n" + render_synthesis(*t.synthesis);
    const auto result = call(profile, build_system_prompt(profile), prompt, ConsultMode::NavigatorExplain,
                             llm::CallKind::TeamMember);
    if (result.status != llm::CompletionStatus::Ok) {
        throw Error("AgentCallFailed", "patient navigator: " + std::string(llm::to_string(result.status)) + " " + result.error);
    }
    return std::string(text::trim(llm::strip_claim_lines(result.text))) + "\n";
}

DischargeSummary Orchestrator::discharge_summary(const PatientCase& c, std::span<const Transcript> transcripts) const {
    const Transcript* latest = nullptr;
    for (const auto& t : transcripts) {
        if (t.synthesis && (!latest || t.created_at >= latest->created_at)) latest = &t;
    }
    if (!latest) throw Error("MissingSynthesis", "no transcript with a synthesis for case " + c.case_id);

    const auto& profile = registry_.profile({RoleKind::CaseManager, {}});
    auto prompt = build_user_prompt(c, kDischargeQuestion, {}, record_time(c));
    prompt += std::string(kSynthesisMarker) + "\n" + render_synthesis(*latest->synthesis);
    const auto result = call(profile, build_system_prompt(profile), prompt, ConsultMode::DischargeSummary,
                             llm::CallKind::TeamMember);
    if (result.status != llm::CompletionStatus::Ok) {
        throw Error("AgentCallFailed", "case manager: " + std::string(llm::to_string(result.status)) + " " + result.error);
    }

    DischargeSummary summary;
    summary.barriers = discharge_barriers(c.sdoh);
    std::ostringstream out;
    out << text::trim(llm::strip_claim_lines(result.text)) << "\n\nDISCHARGE BARRIERS:\n";
    if (summary.barriers.empty()) out << "- none identified\n";
    for (const auto& b : summary.barriers) out << "- " << b << '\n';
    summary.text = out.str();
    return summary;
}

} // namespace matec
