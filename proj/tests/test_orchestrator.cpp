#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "helpers.hpp"
#include "matec/error.hpp"
#include "matec/json_codec.hpp"
#include "matec/mock_backend.hpp"
#include "matec/orchestrator.hpp"
#include "matec/text.hpp"
#include "schema_check.hpp"

using namespace matec;

namespace {

const Registry& registry() {
    static const Registry reg = Registry::load_default();
    return reg;
}

std::unique_ptr<VectorStore> corpus_store() {
    auto store = std::make_unique<VectorStore>(std::make_shared<HashEmbedder>());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(testing::source_dir() / "fixtures/corpus")) {
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) store->ingest(f.stem().string(), f.stem().string(), testing::read_text(f));
    return store;
}

struct Run {
    std::unique_ptr<VectorStore> store;
    std::unique_ptr<llm::MockBackend> backend;
    std::unique_ptr<Orchestrator> orchestrator;
};

Run make_run(const PatientCase& c, std::vector<std::string> faults = {}, std::uint64_t seed = 0,
             OrchestratorConfig config = {}) {
    Run run;
    run.store = corpus_store();
    auto script = llm::MockScript::default_script();
    for (const auto& f : faults) script.faults.push_back(llm::parse_fault(f));
    run.backend = std::make_unique<llm::MockBackend>(std::move(script), seed);
    const auto as_of = record_time(c);
    if (!config.clock) config.clock = [as_of] { return as_of; };
    run.orchestrator = std::make_unique<Orchestrator>(registry(), *run.backend, run.store.get(), config);
    return run;
}

Transcript consult(const PatientCase& c, std::vector<std::string> faults = {},
                   ConsultMode mode = ConsultMode::TeamAssessment) {
    auto run = make_run(c, std::move(faults));
    return run.orchestrator->run_consultation(c, "", mode);
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

const AgentResponse* response_of(const Transcript& t, const char* role) {
    for (const auto& r : t.responses) {
        if (r.role == AgentRole::parse(role)) return &r;
    }
    return nullptr;
}

AgentResponse doctor(const char* role, std::vector<std::string> differential) {
    AgentResponse r;
    r.role = AgentRole::parse(role);
    r.sections.assessment = "a";
    for (auto& d : differential) r.sections.differential.push_back({d, ""});
    return r;
}

// Record values for the fabrication targets, read straight from the fixture.
struct Target {
    ClaimSubject subject;
    std::string field;
    double delta;
    std::string record_value;
};

std::vector<Target> fabrication_targets(const PatientCase& c) {
    std::string creatinine, vancomycin;
    for (const auto& l : c.labs) {
        if (l.name == "creatinine") creatinine = text::format_number(l.value);
    }
    for (const auto& m : c.medications) {
        if (m.name == "vancomycin") vancomycin = text::format_number(m.dose);
    }
    return {{ClaimSubject::Vital, "heart_rate", 40, std::to_string(c.vitals.back().heart_rate)},
            {ClaimSubject::Lab, "creatinine", 2.9, creatinine},
            {ClaimSubject::Medication, "vancomycin", 500, vancomycin}};
}

} // namespace

TEST_CASE("clean golden run") {
    const auto c = testing::load_case("endocarditis");
    const auto t = consult(c);
    CHECK(t.responses.size() == 10);
    for (const auto& r : t.responses) CHECK(r.status == ResponseStatus::Ok);
    REQUIRE(t.synthesis.has_value());
    CHECK(t.synthesis->final_diagnosis == "Sepsis due to infective endocarditis with septic emboli");
    CHECK(t.synthesis->contributing_roles.size() == 10);
    CHECK_FALSE(t.degraded_team);
    REQUIRE(t.verification.has_value());
    CHECK(t.verification->verdict == Verdict::Clean);
    CHECK(t.verification->flags.empty());
    CHECK(t.verification->checked > 0);
    CHECK(t.created_at == record_time(c));
    CHECK(t.question == registry().instantiate_template(ConsultMode::TeamAssessment, c));
    CHECK_FALSE(t.gap_report.has_value());

    const auto json = transcript_to_json(t);
    testing::SchemaSet schemas(testing::source_dir() / "schemas");
    CHECK(schemas.check("transcript.json", json).empty());
    CHECK(transcript_from_json(json) == t);
    CHECK(json.dump(2) + "\n" == testing::read_text(testing::source_dir() / "tests/golden/endocarditis_transcript.json"));
}

TEST_CASE("same seed, same transcript; responses keep team order") {
    const auto c = testing::load_case("endocarditis");
    const auto a = consult(c);
    const auto b = consult(c);
    CHECK(transcript_to_json(a).dump() == transcript_to_json(b).dump());
    const auto team = registry().team(Team::CoreSepsis);
    REQUIRE(a.responses.size() == team.size());
    for (size_t i = 0; i < team.size(); ++i) CHECK(a.responses[i].role == team[i]->role);
}

TEST_CASE("one timeout still yields a synthesis from the other nine") {
    const auto c = testing::load_case("endocarditis");
    const auto t = consult(c, {"timeout:CriticalCare"});
    CHECK(response_of(t, "CriticalCare")->status == ResponseStatus::TimedOut);
    REQUIRE(t.synthesis.has_value());
    CHECK(t.synthesis->contributing_roles.size() == 9);
    CHECK(t.synthesis->contributing_roles.count(AgentRole::parse("CriticalCare")) == 0);
    CHECK(t.verification->verdict == Verdict::Clean);
}

TEST_CASE("synthesis restricted to doctors") {
    const auto c = testing::load_case("endocarditis");
    OrchestratorConfig config;
    config.synthesis_includes_all_roles = false;
    auto run = make_run(c, {}, 0, config);
    const auto t = run.orchestrator->run_consultation(c, "", ConsultMode::TeamAssessment);
    REQUIRE(t.synthesis.has_value());
    CHECK(t.synthesis->contributing_roles.size() == 5);
    for (const auto& r : t.synthesis->contributing_roles) CHECK(r.is_doctor());
}

TEST_CASE("malformed output is kept as a Malformed response") {
    const auto c = testing::load_case("endocarditis");
    const auto t = consult(c, {"malformed:Nurse"});
    CHECK(response_of(t, "Nurse")->status == ResponseStatus::Malformed);
    CHECK(response_of(t, "Nurse")->sections.assessment.empty());
    REQUIRE(t.synthesis.has_value());
    CHECK(t.synthesis->contributing_roles.size() == 9);
}

TEST_CASE("fabrications are flagged for every role and subject") {
    const auto c = testing::load_case("endocarditis");
    for (const auto* profile : registry().team(Team::CoreSepsis)) {
        for (const auto& target : fabrication_targets(c)) {
            const auto role = profile->role.to_string();
            const auto fault = "fabricate:" + role + ":" + std::string(to_string(target.subject)) + ":" + target.field +
                               ":" + text::format_number(target.delta);
            CAPTURE(fault);
            const auto t = consult(c, std::vector<std::string>{fault});
            REQUIRE(t.verification.has_value());
            CHECK(t.verification->verdict == Verdict::Flagged);
            int matching = 0;
            for (const auto& f : t.verification->flags) {
                CHECK(f.reason == FlagReason::ValueMismatch);
                CHECK(f.claim.source_role == profile->role);
                CHECK(f.claim.name == target.field);
                CHECK(f.record_value == target.record_value);
                ++matching;
            }
            CHECK(matching == 1);
        }
    }
}

TEST_CASE("care gap mode categorizes the plans") {
    const auto c = testing::load_case("endocarditis");
    const auto t = consult(c, {}, ConsultMode::CareGap);
    REQUIRE(t.gap_report.has_value());
    std::size_t total = 0;
    for (const auto& [cat, findings] : t.gap_report->categories) {
        total += findings.size();
        for (const auto& f : findings) CHECK_FALSE(f.raised_by.empty());
    }
    CHECK(total > 0);
    CHECK(t.gap_report->categories.size() == 4);
    CHECK(t.gap_report->summary.starts_with(std::to_string(total) + " care gap"));
    CHECK(t.question.find("diagnosis, treatment, monitoring, and care coordination") != std::string::npos);
}

TEST_CASE("all team modes produce a synthesis") {
    const auto c = testing::load_case("pneumonia");
    for (auto mode : {ConsultMode::TeamAssessment, ConsultMode::CareGap, ConsultMode::DifferentialDx,
                      ConsultMode::TreatmentPlan, ConsultMode::AntibioticMgmt, ConsultMode::PharmacyAssessment}) {
        CAPTURE(to_string(mode));
        const auto t = consult(c, {}, mode);
        CHECK(t.synthesis.has_value());
        CHECK(t.verification->verdict == Verdict::Clean);
    }
}

TEST_CASE("fewer than two doctors degrades the team") {
    const auto c = testing::load_case("endocarditis");
    const auto t = consult(c, {"timeout:EmergencyMedicine", "timeout:Hospitalist", "timeout:InfectiousDisease",
                               "timeout:CriticalCare"});
    CHECK(t.degraded_team);
    CHECK_FALSE(t.synthesis.has_value());
    REQUIRE(t.verification.has_value());
    CHECK(t.verification->verdict == Verdict::Clean);
}

TEST_CASE("precondition errors") {
    const auto c = testing::load_case("endocarditis");
    auto run = make_run(c);
    auto& o = *run.orchestrator;
    CHECK(code_of([&] { o.run_consultation(c, "q", ConsultMode::SpecialistConsult); }) == "BadMode");
    auto bad = c;
    bad.vitals[0].spo2 = 140;
    CHECK(code_of([&] { o.run_consultation(bad, "q", ConsultMode::TeamAssessment); }) == "InvalidCase");
    RunOptions options;
    options.team = {AgentRole::specialist("Astrologer")};
    CHECK(code_of([&] { o.run_consultation(c, "q", ConsultMode::TeamAssessment, options); }) == "UnknownRole");
    CHECK(code_of([&] { o.consult_specialist("Astrologer", c, "q"); }) == "UnknownSpecialty");
}

TEST_CASE("synthesis backend failure after one retry") {
    const auto c = testing::load_case("endocarditis");
    auto script = llm::MockScript::default_script();
    script.rules.erase("SeniorPhysician/Synthesis");
    const llm::MockBackend backend(script);
    const Orchestrator o(registry(), backend, nullptr);
    CHECK(code_of([&] { o.run_consultation(c, "q", ConsultMode::TeamAssessment); }) == "SynthesisBackendFailure");
}

TEST_CASE("synthesize examples") {
    const auto c = testing::load_case("endocarditis");
    auto run = make_run(c);
    std::vector<AgentResponse> rs{doctor("EmergencyMedicine", {"Sepsis", "Pneumonia"}),
                                  doctor("Hospitalist", {"Sepsis", "Endocarditis"}),
                                  doctor("InfectiousDisease", {"Endocarditis", "Sepsis"})};
    const auto s = run.orchestrator->synthesize(rs, c, "q", {});
    CHECK(std::find(s.consensus.begin(), s.consensus.end(), "Sepsis") != s.consensus.end());
    CHECK(std::find(s.consensus.begin(), s.consensus.end(), "Endocarditis") != s.consensus.end());
    bool divergence = false;
    for (const auto& d : s.divergence) divergence = divergence || d.topic == "Most likely diagnosis";
    CHECK(divergence);
    CHECK(s.contributing_roles.size() == 3);
}

TEST_CASE("mechanical consensus") {
    std::vector<AgentResponse> agree{doctor("EmergencyMedicine", {"Sepsis", "Pneumonia"}),
                                     doctor("Hospitalist", {"sepsis", "UTI"}),
                                     doctor("CriticalCare", {"Septic shock"}),
                                     doctor("InfectiousDisease", {"Pneumonia"})};
    // ceil(4/2) = 2 differentials must list a diagnosis.
    CHECK(mechanical_consensus(agree) == std::vector<std::string>{"Sepsis", "Pneumonia"});
    std::vector<AgentResponse> single{doctor("Hospitalist", {"Sepsis", "Pneumonia"})};
    CHECK(mechanical_consensus(single) == std::vector<std::string>{"Sepsis"});
    CHECK(mechanical_consensus({}).empty());

    std::vector<AgentResponse> same{doctor("EmergencyMedicine", {"Sepsis"}), doctor("Hospitalist", {"SEPSIS"})};
    CHECK_FALSE(mechanical_divergence(same).has_value());
    const auto d = mechanical_divergence(agree);
    REQUIRE(d.has_value());
    CHECK(d->positions.size() == 4);
    CHECK(d->positions.at(AgentRole::parse("CriticalCare")) == "Septic shock");
}

TEST_CASE("synthesis text round trip") {
    SynthesisReport s;
    s.final_diagnosis = "Sepsis";
    s.consensus = {"Sepsis", "Bacteremia"};
    s.divergence = {{"Source", {{AgentRole::parse("Hospitalist"), "valve"}, {AgentRole::parse("CriticalCare"), "lung"}}}};
    s.care_plan = {"Cultures", "Antibiotics"};
    s.next_steps = {"Echo"};
    const auto back = parse_synthesis(render_synthesis(s), AgentRole::parse("SeniorPhysician"));
    CHECK(back.final_diagnosis == s.final_diagnosis);
    CHECK(back.consensus == s.consensus);
    CHECK(back.divergence == s.divergence);
    CHECK(back.care_plan == s.care_plan);
    CHECK(back.next_steps == s.next_steps);
}

TEST_CASE("verify examples") {
    const auto c = testing::load_case("endocarditis");
    const auto as_of = record_time(c);
    const auto role = AgentRole::parse("Nurse");
    auto check = [&](std::vector<Claim> claims) {
        AgentResponse r;
        r.role = role;
        r.sections.assessment = "a";
        r.sections.claims = std::move(claims);
        std::vector<AgentResponse> rs{r};
        return verify(nullptr, rs, c, {}, as_of);
    };
    CHECK(check({Claim::make(ClaimSubject::Vital, "heart_rate", "118", role)}).verdict == Verdict::Clean);
    CHECK(check({Claim::make(ClaimSubject::Vital, "HR", "119", role)}).verdict == Verdict::Clean);       // within 2%
    CHECK(check({Claim::make(ClaimSubject::Vital, "Temp", "39.25", role)}).verdict == Verdict::Clean);   // within 0.1
    const auto off = check({Claim::make(ClaimSubject::Vital, "pulse", "125", role)});
    REQUIRE(off.flags.size() == 1);
    CHECK(off.flags[0].reason == FlagReason::ValueMismatch);
    CHECK(off.flags[0].record_value == "118");

    // The latest lactate wins.
    CHECK(check({Claim::make(ClaimSubject::Lab, "lactate", "2.8", role)}).verdict == Verdict::Clean);
    CHECK(check({Claim::make(ClaimSubject::Lab, "lactate", "3.1", role)}).flags[0].record_value == "2.8");

    const auto missing = check({Claim::make(ClaimSubject::Lab, "troponin", "0.5", role)});
    CHECK(missing.flags[0].reason == FlagReason::NotInRecord);
    CHECK_FALSE(missing.flags[0].record_value.has_value());
    CHECK(check({Claim::make(ClaimSubject::Medication, "meropenem", "1", role)}).flags[0].reason ==
          FlagReason::NotInRecord);

    CHECK(check({Claim::make(ClaimSubject::HistoryFact, "history", "injection drug use with heroin", role)}).verdict ==
          Verdict::Clean);
    CHECK(check({Claim::make(ClaimSubject::HistoryFact, "history", "prior valve replacement", role)}).flags[0].reason ==
          FlagReason::UnsupportedByContext);
    CHECK(check({Claim::make(ClaimSubject::Vital, "heart_rate", "fast", role)}).flags[0].reason ==
          FlagReason::ValueMismatch);

    const auto report = check({Claim::make(ClaimSubject::Vital, "heart_rate", "118", role),
                               Claim::make(ClaimSubject::Lab, "troponin", "0.5", role)});
    CHECK(report.checked == 2);
    CHECK(report.flags.size() == 1);
}

TEST_CASE("claims of non-Ok responses are not checked") {
    const auto c = testing::load_case("endocarditis");
    AgentResponse r;
    r.role = AgentRole::parse("Nurse");
    r.status = ResponseStatus::TimedOut;
    r.sections.claims = {Claim::make(ClaimSubject::Vital, "heart_rate", "10", r.role)};
    std::vector<AgentResponse> rs{r};
    const auto report = verify(nullptr, rs, c, {}, record_time(c));
    CHECK(report.checked == 0);
    CHECK(report.verdict == Verdict::Clean);
}

TEST_CASE("gap categorization and merging") {
    CHECK(categorize_gap("[Monitoring] Hourly NEWS2") == GapCategory::Monitoring);
    std::string stripped;
    CHECK(categorize_gap("[Treatment]  Narrow antibiotics", &stripped) == GapCategory::Treatment);
    CHECK(stripped == "Narrow antibiotics");
    CHECK(categorize_gap("Obtain transesophageal echocardiogram") == GapCategory::Diagnosis);
    CHECK(categorize_gap("Trend lactate every 2 hours") == GapCategory::Monitoring);
    CHECK(categorize_gap("Adjust vancomycin dosing") == GapCategory::Treatment);
    CHECK(categorize_gap("Arrange shelter placement") == GapCategory::Coordination);

    auto a = doctor("Hospitalist", {"x"});
    a.sections.plan = {"[Treatment] Narrow antibiotics", "Arrange shelter placement"};
    auto b = doctor("CriticalCare", {"x"});
    b.sections.plan = {"narrow antibiotics", "[Monitoring] Hourly NEWS2"};
    std::vector<AgentResponse> rs{a, b};
    const auto report = aggregate_gaps(rs);
    REQUIRE(report.categories.at(GapCategory::Treatment).size() == 1);
    CHECK(report.categories.at(GapCategory::Treatment)[0].raised_by.size() == 2);
    CHECK(report.summary == "3 care gaps: 0 Diagnosis, 1 Treatment, 1 Monitoring, 1 Coordination");

    const std::vector<GapReport> both{report, report};
    CHECK(merge_gap_reports(both).summary == report.summary);
}

TEST_CASE("vital name aliases") {
    CHECK(canonical_vital_name("Heart Rate") == "heart_rate");
    CHECK(canonical_vital_name("HR") == "heart_rate");
    CHECK(canonical_vital_name("SpO2") == "spo2");
    CHECK(canonical_vital_name("Respiratory rate") == "respiration_rate");
    CHECK(canonical_vital_name("Mean arterial pressure") == "mean_arterial_pressure");
}

TEST_CASE("specialist consult") {
    const auto c = testing::load_case("endocarditis");
    auto run = make_run(c);
    const auto t = run.orchestrator->consult_specialist("Nephrologist", c, "Is the creatinine a concern?");
    CHECK(t.mode == ConsultMode::SpecialistConsult);
    REQUIRE(t.responses.size() == 1);
    CHECK(t.responses[0].role == AgentRole::specialist("Nephrologist"));
    CHECK(t.responses[0].status == ResponseStatus::Ok);
    CHECK_FALSE(t.synthesis.has_value());
    CHECK(t.verification->verdict == Verdict::Clean);
}

TEST_CASE("navigator explanation is plain prose without claim lines") {
    const auto c = testing::load_case("endocarditis");
    auto run = make_run(c);
    const auto t = run.orchestrator->run_consultation(c, "", ConsultMode::TeamAssessment);
    const auto text = run.orchestrator->navigator_explain(c, t);
    CHECK_FALSE(text.empty());
    CHECK(text.find("CLAIM:") == std::string::npos);
    CHECK(text.find("CARE PLAN") == std::string::npos);
    auto no_synthesis = t;
    no_synthesis.synthesis.reset();
    CHECK(code_of([&] { run.orchestrator->navigator_explain(c, no_synthesis); }) == "MissingSynthesis");

    auto script = llm::MockScript::default_script();
    script.faults.push_back(llm::parse_fault("timeout:PatientNavigator"));
    const llm::MockBackend failing(script);
    const Orchestrator o(registry(), failing, nullptr);
    CHECK(code_of([&] { o.navigator_explain(c, t); }) == "AgentCallFailed");
}

TEST_CASE("discharge summary lists SDOH barriers") {
    const auto c = testing::load_case("endocarditis");
    auto run = make_run(c);
    std::vector<Transcript> ts{run.orchestrator->run_consultation(c, "", ConsultMode::TeamAssessment)};
    const auto d = run.orchestrator->discharge_summary(c, ts);
    CHECK(d.barriers == std::vector<std::string>{"housing: homeless", "substance use: active"});
    CHECK(d.text.find("DISCHARGE BARRIERS:\n- housing: homeless\n- substance use: active\n") != std::string::npos);
    std::vector<Transcript> none;
    CHECK(code_of([&] { run.orchestrator->discharge_summary(c, none); }) == "MissingSynthesis");

    SocialDeterminants s;
    s.housing = Housing::Stable;
    s.insurance = Insurance::Uninsured;
    CHECK(discharge_barriers(s) == std::vector<std::string>{"insurance: uninsured"});
    s.housing = Housing::Unknown;
    CHECK(discharge_barriers(s).front() == "housing: status not documented");
}

TEST_CASE("follow-up carries the prior synthesis") {
    const auto c = testing::load_case("endocarditis");
    auto run = make_run(c);
    const auto first = run.orchestrator->run_consultation(c, "", ConsultMode::TeamAssessment);
    RunOptions options;
    options.prior = &first;
    const auto second = run.orchestrator->run_consultation(c, "Should we add gentamicin?", ConsultMode::TreatmentPlan, options);
    CHECK(second.followup_of == first.transcript_id);
    CHECK(second.transcript_id != first.transcript_id);
    CHECK(second.question == "Should we add gentamicin?");
}

TEST_CASE("fan-out runs in parallel within the timeout bound") {
    const auto c = testing::load_case("endocarditis");
    auto script = llm::MockScript::default_script();
    script.realtime = true;
    for (const auto* p : registry().team(Team::CoreSepsis)) script.latency_ms[p->role.to_string()] = 150;
    script.latency_ms["CriticalCare"] = 5000;
    const llm::MockBackend backend(script);
    OrchestratorConfig config;
    config.parallelism = 5;
    config.agent_timeout_ms = 400;
    const Orchestrator o(registry(), backend, nullptr, config);
    const auto start = std::chrono::steady_clock::now();
    const auto t = o.run_consultation(c, "", ConsultMode::TeamAssessment);
    const auto took = std::chrono::steady_clock::now() - start;
    CHECK(response_of(t, "CriticalCare")->status == ResponseStatus::TimedOut);
    // Ten agents over five workers: two waves of 150 ms, one slot waiting out the
    // 400 ms timeout, plus the synthesis call.
    CHECK(took < std::chrono::milliseconds(1500));
    CHECK(took >= std::chrono::milliseconds(400));
    REQUIRE(t.synthesis.has_value());
    CHECK(t.synthesis->contributing_roles.size() == 9);
}

TEST_CASE("random fault mixes keep the transcript invariants") {
    const auto c = testing::load_case("endocarditis");
    std::mt19937_64 rng(17);
    const auto team = registry().team(Team::CoreSepsis);
    for (int iter = 0; iter < 40; ++iter) {
        std::vector<std::string> faults;
        for (const auto* p : team) {
            const int roll = std::uniform_int_distribution<int>(0, 9)(rng);
            if (roll == 0) faults.push_back("timeout:" + p->role.to_string());
            if (roll == 1) faults.push_back("malformed:" + p->role.to_string());
        }
        // The senior physician also writes the synthesis, so a fault on it
        // fails the whole run whenever a synthesis is due.
        bool senior_faulted = false;
        int healthy_doctors = 0;
        for (const auto* p : team) {
            const bool faulted = std::any_of(faults.begin(), faults.end(), [&](const std::string& f) {
                return f.ends_with(":" + p->role.to_string());
            });
            if (p->role.kind == RoleKind::SeniorPhysician) senior_faulted = faulted;
            if (p->role.is_doctor() && !faulted) ++healthy_doctors;
        }
        if (senior_faulted && healthy_doctors >= 2) {
            CHECK(code_of([&] { consult(c, faults); }) == "SynthesisBackendFailure");
            continue;
        }
        const auto t = consult(c, faults);
        CHECK(t.responses.size() == team.size());
        std::set<AgentRole> roles;
        for (const auto& r : t.responses) roles.insert(r.role);
        CHECK(roles.size() == t.responses.size());
        CHECK(t.mode == ConsultMode::TeamAssessment);
        CHECK_FALSE(t.gap_report.has_value());
        int ok_doctors = 0;
        for (const auto& r : t.responses) {
            if (r.status != ResponseStatus::Ok) CHECK(r.sections.claims.empty());
            if (r.status == ResponseStatus::Ok && r.role.is_doctor()) ++ok_doctors;
        }
        CHECK(t.synthesis.has_value() == (ok_doctors >= 2));
        CHECK(t.degraded_team == (ok_doctors < 2));
        REQUIRE(t.verification.has_value());
        CHECK(t.verification->verdict == Verdict::Clean);
        if (t.synthesis) {
            for (const auto& role : t.synthesis->contributing_roles) CHECK(response_of(t, role.to_string().c_str())->status == ResponseStatus::Ok);
        }
    }
}
