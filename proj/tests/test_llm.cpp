#include <doctest.h>

#include <functional>
#include <thread>

#include <httplib.h>

#include "helpers.hpp"
#include "matec/error.hpp"
#include "matec/live_backend.hpp"
#include "matec/llm.hpp"
#include "matec/mock_backend.hpp"
#include "matec/registry.hpp"

using namespace matec;
using namespace matec::llm;

namespace {

const std::vector<ConsultMode> kTeamModes{ConsultMode::TeamAssessment, ConsultMode::CareGap,
                                          ConsultMode::DifferentialDx, ConsultMode::TreatmentPlan,
                                          ConsultMode::AntibioticMgmt, ConsultMode::PharmacyAssessment};

CompletionRequest request_for(const AgentRole& role, ConsultMode mode, const std::string& user_prompt) {
    CompletionRequest r;
    r.system_prompt = "system";
    r.user_prompt = user_prompt;
    r.role = role;
    r.mode = mode;
    return r;
}

std::string endocarditis_prompt(const char* question = "Assess the patient.") {
    const auto c = testing::load_case("endocarditis");
    return build_user_prompt(c, question, {}, parse_instant("2024-03-02T16:00:00Z"));
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST_CASE("parse structured sections") {
    const auto text =
        "## Assessment:\nSeptic shock likely.\nSecond line.\n"
        "**Differential Diagnosis:**\n1. Endocarditis | murmur and bacteremia\n2) Pneumonia -- infiltrate\n- Abscess\n"
        "Plan:\n- Start vancomycin\n* Repeat lactate\n"
        "CLAIMS:\nCLAIM: Vital|heart_rate|118\nCLAIM: lab|wbc|16.2\nCLAIM: History|history|heroin use\n"
        "CLAIM: Unknown|x|1\nCLAIM: Vital||1\n";
    const auto role = AgentRole::parse("Hospitalist");
    const auto p = parse_structured(text, role);
    CHECK(p.status == ResponseStatus::Ok);
    CHECK(p.sections.assessment == "Septic shock likely.\nSecond line.");
    REQUIRE(p.sections.differential.size() == 3);
    CHECK(p.sections.differential[0].condition == "Endocarditis");
    CHECK(p.sections.differential[0].reasoning == "murmur and bacteremia");
    CHECK(p.sections.differential[1].condition == "Pneumonia");
    CHECK(p.sections.differential[1].reasoning == "infiltrate");
    CHECK(p.sections.differential[2].condition == "Abscess");
    CHECK(p.sections.plan == std::vector<std::string>{"Start vancomycin", "Repeat lactate"});
    REQUIRE(p.sections.claims.size() == 3);
    CHECK(p.sections.claims[0].numeric_value == 118.0);
    CHECK(p.sections.claims[1].subject == ClaimSubject::Lab);
    CHECK(p.sections.claims[2].subject == ClaimSubject::HistoryFact);
    CHECK(p.sections.claims[2].source_role == role);
}

TEST_CASE("missing or empty assessment is malformed") {
    CHECK(parse_structured("PLAN:\n- rest\n").status == ResponseStatus::Malformed);
    CHECK(parse_structured("ASSESSMENT:\n\nPLAN:\n- rest\n").status == ResponseStatus::Malformed);
    CHECK(parse_structured("I cannot help with that.").status == ResponseStatus::Malformed);
    const auto inline_heading = parse_structured("Assessment: stable\n");
    CHECK(inline_heading.status == ResponseStatus::Ok);
    CHECK(inline_heading.sections.assessment == "stable");
    CHECK(inline_heading.sections.plan.empty());
}

TEST_CASE("render and parse round trip") {
    const auto role = AgentRole::parse("Nurse");
    StructuredResponse r;
    r.assessment = "Tachycardic and febrile.";
    r.differential = {{"Sepsis", "SIRS criteria"}, {"Dehydration", ""}};
    r.plan = {"Hourly observations", "Strict fluid balance"};
    r.claims = {Claim::make(ClaimSubject::Vital, "heart_rate", "118", role),
                Claim::make(ClaimSubject::Medication, "vancomycin", "1250", role)};
    const auto parsed = parse_structured(render_structured(r), role);
    CHECK(parsed.status == ResponseStatus::Ok);
    CHECK(parsed.sections == r);
}

TEST_CASE("strip helpers") {
    CHECK(strip_claim_lines("Hello\nCLAIM: Vital|hr|1\nBye\n") == "Hello\nBye\n");
    CHECK(strip_list_marker("  12. item") == "item");
    CHECK(strip_list_marker("- item") == "item");
    CHECK(strip_list_marker("plain") == "plain");
}

TEST_CASE("request validation") {
    auto r = request_for(AgentRole::parse("Nurse"), ConsultMode::TeamAssessment, "prompt");
    CHECK_NOTHROW(r.validate());
    auto t = r;
    t.timeout_ms = 0;
    CHECK(code_of([&] { t.validate(); }) == "BadRequest");
    auto e = r;
    e.user_prompt = " ";
    CHECK(code_of([&] { e.validate(); }) == "BadRequest");
    auto temp = r;
    temp.temperature = 2.5;
    CHECK(code_of([&] { temp.validate(); }) == "BadRequest");
}

TEST_CASE("fault specs") {
    const auto t = parse_fault("timeout:CriticalCare");
    CHECK(t.kind == FaultKind::Timeout);
    CHECK(t.target == AgentRole::parse("CriticalCare"));
    CHECK(parse_fault("malformed:Nurse").kind == FaultKind::MalformedOutput);
    const auto f = parse_fault("fabricate:InfectiousDisease:Vital:heart_rate:40");
    CHECK(f.kind == FaultKind::FabricateValue);
    CHECK(f.target == AgentRole::parse("InfectiousDisease"));
    CHECK(f.subject == ClaimSubject::Vital);
    CHECK(f.field == "heart_rate");
    CHECK(f.delta == 40);
    const auto s = parse_fault("fabricate:Specialist:Cardiologist:Lab:wbc:-3.5");
    CHECK(s.target == AgentRole::specialist("Cardiologist"));
    CHECK(s.delta == -3.5);
    CHECK(code_of([] { parse_fault("explode:Nurse"); }) == "BadFault");
    CHECK(code_of([] { parse_fault("timeout"); }) == "BadFault");
    CHECK(code_of([] { parse_fault("fabricate:Nurse:Vital:heart_rate:lots"); }) == "BadFault");
}

TEST_CASE("default script answers every core role in every team mode") {
    const MockBackend mock;
    const auto reg = Registry::load_default();
    const auto prompt = endocarditis_prompt();
    for (const auto* p : reg.team(Team::CoreSepsis)) {
        for (auto mode : kTeamModes) {
            CAPTURE(p->role.to_string());
            CAPTURE(to_string(mode));
            const auto r = mock.complete(request_for(p->role, mode, prompt));
            REQUIRE(r.status == CompletionStatus::Ok);
            const auto parsed = parse_structured(r.text, p->role);
            CHECK(parsed.status == ResponseStatus::Ok);
            CHECK_FALSE(parsed.sections.plan.empty());
            CHECK_FALSE(parsed.sections.claims.empty());
            if (p->role.is_doctor()) CHECK_FALSE(parsed.sections.differential.empty());
        }
    }
}

TEST_CASE("mock answers are grounded in the prompt") {
    const MockBackend mock;
    const auto role = AgentRole::parse("InfectiousDisease");
    const auto r = mock.complete(request_for(role, ConsultMode::TeamAssessment, endocarditis_prompt()));
    const auto parsed = parse_structured(r.text, role);
    bool hr = false, vanc = false;
    for (const auto& c : parsed.sections.claims) {
        if (c.name == "heart_rate") hr = c.asserted_value == "118";
        if (c.name == "vancomycin") vanc = c.asserted_value == "1250";
    }
    CHECK(hr);
    CHECK(vanc);
    REQUIRE_FALSE(parsed.sections.differential.empty());
    CHECK(parsed.sections.differential[0].condition == "Sepsis due to infective endocarditis with septic emboli");
}

TEST_CASE("mock is deterministic per seed") {
    const auto role = AgentRole::parse("Hospitalist");
    const auto req = request_for(role, ConsultMode::TeamAssessment, endocarditis_prompt());
    const MockBackend a(MockScript::default_script(), 7);
    const MockBackend b(MockScript::default_script(), 7);
    const auto ra = a.complete(req);
    const auto rb = b.complete(req);
    CHECK(ra.text == rb.text);
    CHECK(ra.latency_ms == rb.latency_ms);
    CHECK(ra.latency_ms >= 200);
    CHECK(ra.latency_ms < 1000);
}

TEST_CASE("mock faults") {
    const auto prompt = endocarditis_prompt();
    const auto nurse = AgentRole::parse("Nurse");

    MockScript timeout = MockScript::default_script();
    timeout.faults.push_back(parse_fault("timeout:Nurse"));
    auto req = request_for(nurse, ConsultMode::TeamAssessment, prompt);
    req.timeout_ms = 1234;
    const auto t = MockBackend(timeout).complete(req);
    CHECK(t.status == CompletionStatus::TimedOut);
    CHECK(t.latency_ms == 1234);
    // Other roles are unaffected.
    CHECK(MockBackend(timeout).complete(request_for(AgentRole::parse("Pharmacist"), ConsultMode::TeamAssessment, prompt))
              .status == CompletionStatus::Ok);

    MockScript slow = MockScript::default_script();
    slow.latency_ms["Nurse"] = 5000;
    req.timeout_ms = 4000;
    CHECK(MockBackend(slow).complete(req).status == CompletionStatus::TimedOut);

    MockScript malformed = MockScript::default_script();
    malformed.faults.push_back(parse_fault("malformed:Nurse"));
    const auto m = MockBackend(malformed).complete(request_for(nurse, ConsultMode::TeamAssessment, prompt));
    CHECK(m.status == CompletionStatus::Ok);
    CHECK(parse_structured(m.text).status == ResponseStatus::Malformed);

    MockScript fab = MockScript::default_script();
    fab.faults.push_back(parse_fault("fabricate:Nurse:Vital:heart_rate:40"));
    const auto f = MockBackend(fab).complete(request_for(nurse, ConsultMode::TeamAssessment, prompt));
    bool found = false;
    for (const auto& c : parse_structured(f.text, nurse).sections.claims) {
        if (c.name == "heart_rate") found = c.numeric_value == 158.0;
    }
    CHECK(found);

    MockScript empty;
    const auto missing = MockBackend(empty).complete(request_for(nurse, ConsultMode::TeamAssessment, prompt));
    CHECK(missing.status == CompletionStatus::BackendError);
}

TEST_CASE("rule keys") {
    const auto script = MockScript::default_script();
    CHECK(MockScript::rule_key(AgentRole::parse("Nurse"), ConsultMode::CareGap, CallKind::TeamMember) == "Nurse/CareGap");
    CHECK(MockScript::rule_key(AgentRole::parse("SeniorPhysician"), ConsultMode::CareGap, CallKind::Synthesis) ==
          "SeniorPhysician/Synthesis");
    CHECK(script.find_rule(AgentRole::specialist("Nephrologist"), ConsultMode::SpecialistConsult, CallKind::TeamMember) !=
          nullptr);
    CHECK(script.find_rule(AgentRole::parse("SeniorPhysician"), ConsultMode::TeamAssessment, CallKind::Synthesis) !=
          nullptr);
    CHECK(script.find_rule(AgentRole::parse("PatientNavigator"), ConsultMode::NavigatorExplain, CallKind::TeamMember) !=
          nullptr);
    CHECK(script.find_rule(AgentRole::parse("CaseManager"), ConsultMode::DischargeSummary, CallKind::TeamMember) !=
          nullptr);
}

TEST_CASE("completion text extraction") {
    std::string out;
    CHECK(extract_completion_text(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})", out));
    CHECK(out == "hi");
    CHECK_FALSE(extract_completion_text(R"({"choices":[]})", out));
    CHECK_FALSE(extract_completion_text(R"({"choices":[{"message":{"content":7}}]})", out));
    CHECK_FALSE(extract_completion_text("not json", out));
}

TEST_CASE("live backend against a local endpoint") {
    httplib::Server server;
    std::string seen_auth;
    nlohmann::json seen_body;
    std::mutex seen_mutex;
    server.Post("/ok/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        {
            std::lock_guard lock(seen_mutex);
            seen_auth = req.get_header_value("Authorization");
            seen_body = nlohmann::json::parse(req.body);
        }
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"ASSESSMENT:\nfine"}}]})",
                        "application/json");
    });
    server.Post("/fail/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("{}", "application/json");
    });
    server.Post("/odd/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"result":"ok"})", "application/json");
    });
    server.Post("/slow/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        res.set_content("{}", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto base = "http://127.0.0.1:" + std::to_string(port);
    auto req = request_for(AgentRole::parse("Nurse"), ConsultMode::TeamAssessment, "user prompt");
    req.system_prompt = "system prompt";
    req.timeout_ms = 3000;

    const auto ok = LiveBackend({base + "/ok/", "test-model", "secret"}).complete(req);
    CHECK(ok.status == CompletionStatus::Ok);
    CHECK(ok.text == "ASSESSMENT:\nfine");
    CHECK(ok.http_status == 200);
    {
        std::lock_guard lock(seen_mutex);
        CHECK(seen_auth == "Bearer secret");
        CHECK(seen_body["model"] == "test-model");
        CHECK(seen_body["messages"][0]["role"] == "system");
        CHECK(seen_body["messages"][0]["content"] == "system prompt");
        CHECK(seen_body["messages"][1]["content"] == "user prompt");
    }

    const auto fail = LiveBackend({base + "/fail", "m", ""}).complete(req);
    CHECK(fail.status == CompletionStatus::BackendError);
    CHECK(fail.http_status == 500);

    CHECK(LiveBackend({base + "/odd", "m", ""}).complete(req).status == CompletionStatus::MalformedResponse);

    auto short_req = req;
    short_req.timeout_ms = 300;
    const auto started = std::chrono::steady_clock::now();
    const auto slow = LiveBackend({base + "/slow", "m", ""}).complete(short_req);
    const auto took = std::chrono::steady_clock::now() - started;
    CHECK(slow.status == CompletionStatus::TimedOut);
    CHECK(took < std::chrono::milliseconds(1400));

    server.stop();
    thread.join();

    // Nothing listens on the port any more.
    const auto refused = LiveBackend({base + "/ok", "m", ""}).complete(req);
    CHECK(refused.status == CompletionStatus::BackendError);

    CHECK(code_of([] { LiveBackend({"ftp://x", "m", ""}); }) == "BadUrl");
}
