#include "matec/json_codec.hpp"

#include <algorithm>

#include "matec/error.hpp"

namespace matec {

namespace json_util {

void expect_object(const Json& j, std::string_view path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw Error("BadDocument", std::string(path) + ": expected an object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw Error("BadDocument", std::string(path) + ": unknown key '" + item.key() + "'");
        }
    }
}

const Json& require(const Json& j, std::string_view key, std::string_view path) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw Error("BadDocument", std::string(path) + ": missing key '" + std::string(key) + "'");
    }
    return *it;
}

} // namespace json_util

namespace {

using json_util::expect_object;

std::string sub(std::string_view path, std::string_view key) { return std::string(path) + "." + std::string(key); }

// Typed field access that reports the JSON path on failure.
template <typename T> T get(const Json& j, std::string_view key, std::string_view path) {
    const Json& v = json_util::require(j, key, path);
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error("BadDocument", sub(path, key) + ": wrong type");
    }
}

template <typename E> E get_enum(const Json& j, std::string_view key, std::string_view path) {
    const auto s = get<std::string>(j, key, path);
    try {
        return enum_from_string<E>(s);
    } catch (const Error&) {
        throw Error("BadDocument", sub(path, key) + ": unknown value '" + s + "'");
    }
}

Instant get_instant(const Json& j, std::string_view key, std::string_view path) {
    const auto s = get<std::string>(j, key, path);
    try {
        return parse_instant(s);
    } catch (const Error&) {
        throw Error("BadDocument", sub(path, key) + ": bad timestamp '" + s + "'");
    }
}

AgentRole get_role(const Json& j, std::string_view key, std::string_view path) {
    const auto s = get<std::string>(j, key, path);
    try {
        return AgentRole::parse(s);
    } catch (const Error&) {
        throw Error("BadDocument", sub(path, key) + ": unknown role '" + s + "'");
    }
}

void check_version(const Json& j, std::string_view path) {
    if (get<int>(j, "schema_version", path) != kSchemaVersion) {
        throw Error("BadDocument", std::string(path) + ": unsupported schema_version");
    }
}

Json claim_json(const Claim& c) {
    Json j{{"subject", to_string(c.subject)},
           {"name", c.name},
           {"asserted_value", c.asserted_value},
           {"source_role", c.source_role.to_string()}};
    j["numeric_value"] = c.numeric_value ? Json(*c.numeric_value) : Json(nullptr);
    return j;
}

Claim claim_from(const Json& j, std::string_view path) {
    expect_object(j, path, {"subject", "name", "asserted_value", "numeric_value", "source_role"});
    // numeric_value is derived from asserted_value; re-deriving keeps the invariant.
    return Claim::make(get_enum<ClaimSubject>(j, "subject", path), get<std::string>(j, "name", path),
                       get<std::string>(j, "asserted_value", path), get_role(j, "source_role", path));
}

Json roles_json(const std::set<AgentRole>& roles) {
    Json arr = Json::array();
    for (const auto& r : roles) arr.push_back(r.to_string());
    return arr;
}

std::set<AgentRole> roles_from(const Json& j, std::string_view path) {
    if (!j.is_array()) throw Error("BadDocument", std::string(path) + ": expected an array");
    std::set<AgentRole> out;
    for (const auto& r : j) {
        if (!r.is_string()) throw Error("BadDocument", std::string(path) + ": expected role strings");
        out.insert(AgentRole::parse(r.get<std::string>()));
    }
    return out;
}

template <typename T, typename F> std::vector<T> array_from(const Json& j, std::string_view key, std::string_view path, F f) {
    const Json& arr = json_util::require(j, key, path);
    if (!arr.is_array()) throw Error("BadDocument", sub(path, key) + ": expected an array");
    std::vector<T> out;
    for (size_t i = 0; i < arr.size(); ++i) {
        out.push_back(f(arr[i], sub(path, key) + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::string> strings_from(const Json& j, std::string_view key, std::string_view path) {
    return array_from<std::string>(j, key, path, [](const Json& v, const std::string& p) {
        if (!v.is_string()) throw Error("BadDocument", p + ": expected a string");
        return v.get<std::string>();
    });
}

Json response_json(const AgentResponse& r) {
    Json diff = Json::array();
    for (const auto& d : r.sections.differential) diff.push_back({{"condition", d.condition}, {"reasoning", d.reasoning}});
    Json claims = Json::array();
    for (const auto& c : r.sections.claims) claims.push_back(claim_json(c));
    return {{"role", r.role.to_string()},
            {"sections",
             {{"assessment", r.sections.assessment},
              {"differential", diff},
              {"plan", r.sections.plan},
              {"claims", claims}}},
            {"latency_ms", r.latency_ms},
            {"status", to_string(r.status)}};
}

AgentResponse response_from(const Json& j, std::string_view path) {
    expect_object(j, path, {"role", "sections", "latency_ms", "status"});
    AgentResponse r;
    r.role = get_role(j, "role", path);
    r.latency_ms = get<std::int64_t>(j, "latency_ms", path);
    r.status = get_enum<ResponseStatus>(j, "status", path);
    const auto spath = sub(path, "sections");
    const Json& s = json_util::require(j, "sections", path);
    expect_object(s, spath, {"assessment", "differential", "plan", "claims"});
    r.sections.assessment = get<std::string>(s, "assessment", spath);
    r.sections.differential = array_from<DiagnosisItem>(s, "differential", spath, [](const Json& d, const std::string& p) {
        expect_object(d, p, {"condition", "reasoning"});
        return DiagnosisItem{get<std::string>(d, "condition", p), get<std::string>(d, "reasoning", p)};
    });
    r.sections.plan = strings_from(s, "plan", spath);
    r.sections.claims = array_from<Claim>(s, "claims", spath, claim_from);
    return r;
}

Json synthesis_json(const SynthesisReport& s) {
    Json divergence = Json::array();
    for (const auto& d : s.divergence) {
        Json positions = Json::object();
        for (const auto& [role, text] : d.positions) positions[role.to_string()] = text;
        divergence.push_back({{"topic", d.topic}, {"positions", positions}});
    }
    Json claims = Json::array();
    for (const auto& c : s.claims) claims.push_back(claim_json(c));
    return {{"final_diagnosis", s.final_diagnosis}, {"consensus", s.consensus},
            {"divergence", divergence},             {"care_plan", s.care_plan},
            {"next_steps", s.next_steps},           {"contributing_roles", roles_json(s.contributing_roles)},
            {"claims", claims}};
}

SynthesisReport synthesis_from(const Json& j, std::string_view path) {
    expect_object(j, path,
                  {"final_diagnosis", "consensus", "divergence", "care_plan", "next_steps", "contributing_roles", "claims"});
    SynthesisReport s;
    s.final_diagnosis = get<std::string>(j, "final_diagnosis", path);
    s.consensus = strings_from(j, "consensus", path);
    s.divergence = array_from<DivergenceTopic>(j, "divergence", path, [](const Json& d, const std::string& p) {
        expect_object(d, p, {"topic", "positions"});
        DivergenceTopic t;
        t.topic = get<std::string>(d, "topic", p);
        const Json& positions = json_util::require(d, "positions", p);
        if (!positions.is_object()) throw Error("BadDocument", p + ".positions: expected an object");
        for (const auto& item : positions.items()) {
            t.positions[AgentRole::parse(item.key())] = item.value().get<std::string>();
        }
        return t;
    });
    s.care_plan = strings_from(j, "care_plan", path);
    s.next_steps = strings_from(j, "next_steps", path);
    s.contributing_roles = roles_from(json_util::require(j, "contributing_roles", path), sub(path, "contributing_roles"));
    s.claims = array_from<Claim>(j, "claims", path, claim_from);
    return s;
}

Json verification_json(const VerificationReport& v) {
    Json flags = Json::array();
    for (const auto& f : v.flags) {
        Json flag{{"claim", claim_json(f.claim)}, {"reason", to_string(f.reason)}};
        flag["record_value"] = f.record_value ? Json(*f.record_value) : Json(nullptr);
        flags.push_back(flag);
    }
    return {{"checked", v.checked}, {"flags", flags}, {"verdict", to_string(v.verdict)}};
}

VerificationReport verification_from(const Json& j, std::string_view path) {
    expect_object(j, path, {"checked", "flags", "verdict"});
    VerificationReport v;
    v.checked = get<int>(j, "checked", path);
    v.verdict = get_enum<Verdict>(j, "verdict", path);
    v.flags = array_from<VerificationFlag>(j, "flags", path, [](const Json& f, const std::string& p) {
        expect_object(f, p, {"claim", "reason", "record_value"});
        VerificationFlag flag;
        flag.claim = claim_from(json_util::require(f, "claim", p), p + ".claim");
        flag.reason = get_enum<FlagReason>(f, "reason", p);
        if (auto it = f.find("record_value"); it != f.end() && !it->is_null()) flag.record_value = it->get<std::string>();
        return flag;
    });
    return v;
}

Json gap_json(const GapReport& g) {
    Json categories = Json::object();
    for (const auto& [cat, findings] : g.categories) {
        Json arr = Json::array();
        for (const auto& f : findings) arr.push_back({{"finding", f.finding}, {"raised_by", roles_json(f.raised_by)}});
        categories[std::string(to_string(cat))] = arr;
    }
    return {{"categories", categories}, {"summary", g.summary}};
}

GapReport gap_from(const Json& j, std::string_view path) {
    expect_object(j, path, {"categories", "summary"});
    GapReport g;
    g.summary = get<std::string>(j, "summary", path);
    const Json& categories = json_util::require(j, "categories", path);
    if (!categories.is_object()) throw Error("BadDocument", sub(path, "categories") + ": expected an object");
    for (const auto& item : categories.items()) {
        const auto cat = enum_from_string<GapCategory>(item.key());
        const auto cpath = sub(path, "categories." + item.key());
        auto& findings = g.categories[cat];
        for (const auto& f : item.value()) {
            expect_object(f, cpath, {"finding", "raised_by"});
            findings.push_back(GapFinding{get<std::string>(f, "finding", cpath),
                                          roles_from(json_util::require(f, "raised_by", cpath), cpath)});
        }
    }
    return g;
}

} // namespace

Json vitals_to_json(const VitalSigns& v) {
    return {{"timestamp", format_instant(v.timestamp)},
            {"respiration_rate", v.respiration_rate},
            {"spo2", v.spo2},
            {"on_supplemental_oxygen", v.on_supplemental_oxygen},
            {"spo2_scale", to_string(v.spo2_scale)},
            {"systolic_bp", v.systolic_bp},
            {"heart_rate", v.heart_rate},
            {"consciousness", to_string(v.consciousness)},
            {"temperature", v.temperature.degrees()}};
}

namespace {

VitalSigns vitals_from(const Json& j, std::string_view path) {
    expect_object(j, path,
                  {"timestamp", "respiration_rate", "spo2", "on_supplemental_oxygen", "spo2_scale", "systolic_bp",
                   "heart_rate", "consciousness", "temperature"});
    VitalSigns v;
    v.timestamp = get_instant(j, "timestamp", path);
    v.respiration_rate = get<int>(j, "respiration_rate", path);
    v.spo2 = get<int>(j, "spo2", path);
    v.on_supplemental_oxygen = get<bool>(j, "on_supplemental_oxygen", path);
    v.spo2_scale = get_enum<Spo2Scale>(j, "spo2_scale", path);
    v.systolic_bp = get<int>(j, "systolic_bp", path);
    v.heart_rate = get<int>(j, "heart_rate", path);
    v.consciousness = get_enum<Consciousness>(j, "consciousness", path);
    try {
        v.temperature = TenthsCelsius::from_degrees(get<double>(j, "temperature", path));
    } catch (const Error& e) {
        if (e.code() == "BadDocument") throw;
        throw Error("BadDocument", sub(path, "temperature") + ": " + e.what());
    }
    return v;
}

} // namespace

VitalSigns vitals_from_json(const Json& j) { return vitals_from(j, "$"); }

Json case_to_json(const PatientCase& c) {
    Json vitals = Json::array();
    for (const auto& v : c.vitals) vitals.push_back(vitals_to_json(v));
    Json labs = Json::array();
    for (const auto& l : c.labs) {
        labs.push_back(
            {{"name", l.name}, {"value", l.value}, {"unit", l.unit}, {"timestamp", format_instant(l.timestamp)}});
    }
    Json meds = Json::array();
    for (const auto& m : c.medications) {
        meds.push_back({{"name", m.name},
                        {"dose", m.dose},
                        {"dose_unit", m.dose_unit},
                        {"route", m.route},
                        {"frequency", m.frequency}});
    }
    Json j{{"schema_version", kSchemaVersion},
           {"case_id", c.case_id},
           {"demographics", {{"age", c.demographics.age}, {"sex", to_string(c.demographics.sex)}}},
           {"chief_complaint", c.chief_complaint},
           {"history", c.history},
           {"vitals", vitals},
           {"labs", labs},
           {"medications", meds},
           {"sdoh",
            {{"housing", to_string(c.sdoh.housing)},
             {"substance_use", to_string(c.sdoh.substance_use)},
             {"insurance", to_string(c.sdoh.insurance)},
             {"support", c.sdoh.support}}}};
    j["current_plan"] = c.current_plan ? Json(*c.current_plan) : Json(nullptr);
    return j;
}

PatientCase case_from_json(const Json& j) {
    constexpr std::string_view path = "$";
    expect_object(j, path,
                  {"schema_version", "case_id", "demographics", "chief_complaint", "history", "vitals", "labs",
                   "medications", "current_plan", "sdoh"});
    check_version(j, path);
    PatientCase c;
    c.case_id = get<std::string>(j, "case_id", path);
    const Json& demo = json_util::require(j, "demographics", path);
    expect_object(demo, "$.demographics", {"age", "sex"});
    c.demographics.age = get<int>(demo, "age", "$.demographics");
    c.demographics.sex = get_enum<Sex>(demo, "sex", "$.demographics");
    c.chief_complaint = get<std::string>(j, "chief_complaint", path);
    c.history = get<std::string>(j, "history", path);
    c.vitals = array_from<VitalSigns>(j, "vitals", path, vitals_from);
    c.labs = array_from<LabResult>(j, "labs", path, [](const Json& l, const std::string& p) {
        expect_object(l, p, {"name", "value", "unit", "timestamp"});
        return LabResult{get<std::string>(l, "name", p), get<double>(l, "value", p), get<std::string>(l, "unit", p),
                         get_instant(l, "timestamp", p)};
    });
    c.medications = array_from<MedicationOrder>(j, "medications", path, [](const Json& m, const std::string& p) {
        expect_object(m, p, {"name", "dose", "dose_unit", "route", "frequency"});
        return MedicationOrder{get<std::string>(m, "name", p), get<double>(m, "dose", p),
                               get<std::string>(m, "dose_unit", p), get<std::string>(m, "route", p),
                               get<std::string>(m, "frequency", p)};
    });
    if (auto it = j.find("current_plan"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw Error("BadDocument", "$.current_plan: expected a string");
        c.current_plan = it->get<std::string>();
    }
    const Json& sdoh = json_util::require(j, "sdoh", path);
    expect_object(sdoh, "$.sdoh", {"housing", "substance_use", "insurance", "support"});
    c.sdoh.housing = get_enum<Housing>(sdoh, "housing", "$.sdoh");
    c.sdoh.substance_use = get_enum<SubstanceUse>(sdoh, "substance_use", "$.sdoh");
    c.sdoh.insurance = get_enum<Insurance>(sdoh, "insurance", "$.sdoh");
    c.sdoh.support = get<std::string>(sdoh, "support", "$.sdoh");
    return c;
}

Json response_to_json(const AgentResponse& r) { return response_json(r); }
Json claim_to_json(const Claim& c) { return claim_json(c); }
Json synthesis_to_json(const SynthesisReport& s) { return synthesis_json(s); }
Json verification_to_json(const VerificationReport& v) { return verification_json(v); }
Json gap_report_to_json(const GapReport& g) { return gap_json(g); }
GapReport gap_report_from_json(const Json& j) { return gap_from(j, "$"); }

Json validation_to_json(const ValidationReport& r) {
    Json arr = Json::array();
    for (const auto& v : r) arr.push_back({{"path", v.path}, {"message", v.message}});
    return arr;
}

Json transcript_to_json(const Transcript& t) {
    Json responses = Json::array();
    for (const auto& r : t.responses) responses.push_back(response_json(r));
    Json j{{"schema_version", kSchemaVersion},
           {"transcript_id", t.transcript_id},
           {"case_id", t.case_id},
           {"question", t.question},
           {"mode", to_string(t.mode)},
           {"responses", responses},
           {"created_at", format_instant(t.created_at)},
           {"degraded_team", t.degraded_team}};
    j["synthesis"] = t.synthesis ? synthesis_json(*t.synthesis) : Json(nullptr);
    j["verification"] = t.verification ? verification_json(*t.verification) : Json(nullptr);
    j["gap_report"] = t.gap_report ? gap_json(*t.gap_report) : Json(nullptr);
    j["followup_of"] = t.followup_of ? Json(*t.followup_of) : Json(nullptr);
    return j;
}

Transcript transcript_from_json(const Json& j) {
    constexpr std::string_view path = "$";
    expect_object(j, path,
                  {"schema_version", "transcript_id", "case_id", "question", "mode", "responses", "synthesis",
                   "verification", "gap_report", "created_at", "degraded_team", "followup_of"});
    check_version(j, path);
    Transcript t;
    t.transcript_id = get<std::string>(j, "transcript_id", path);
    t.case_id = get<std::string>(j, "case_id", path);
    t.question = get<std::string>(j, "question", path);
    t.mode = get_enum<ConsultMode>(j, "mode", path);
    t.responses = array_from<AgentResponse>(j, "responses", path, response_from);
    t.created_at = get_instant(j, "created_at", path);
    t.degraded_team = get<bool>(j, "degraded_team", path);
    auto present = [&](std::string_view key) {
        auto it = j.find(key);
        return it != j.end() && !it->is_null();
    };
    if (present("synthesis")) t.synthesis = synthesis_from(j["synthesis"], "$.synthesis");
    if (present("verification")) t.verification = verification_from(j["verification"], "$.verification");
    if (present("gap_report")) t.gap_report = gap_from(j["gap_report"], "$.gap_report");
    if (present("followup_of")) t.followup_of = get<std::string>(j, "followup_of", path);
    return t;
}

} // namespace matec
