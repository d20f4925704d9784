#include "matec/http_api.hpp"

#include <map>
#include <memory>
#include <regex>

#include <spdlog/spdlog.h>

#include "matec/json_codec.hpp"
#include "matec/stats.hpp"

namespace matec {

namespace {

using nlohmann::json;

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_problem(httplib::Response& res, const std::string& code, const std::string& message, json detail = nullptr) {
    send(res, http_status_for(code), problem(code, message, std::move(detail)));
}

json parse_body(const httplib::Request& req) {
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error("BadRequest", "request body is not valid JSON");
    if (!j.is_object()) throw Error("BadRequest", "request body must be a JSON object");
    return j;
}

std::string str_field(const json& j, const char* key, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) throw Error("BadRequest", std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) throw Error("BadRequest", std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed) {
    try {
        json_util::expect_object(j, "$", allowed);
    } catch (const Error& e) {
        throw Error("BadRequest", e.what());
    }
}

// Runs a handler, converting every error into a problem document.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ValidationError& e) {
            send_problem(res, e.code(), e.what(), validation_to_json(e.report()));
        } catch (const Error& e) {
            send_problem(res, e.code(), e.what());
        } catch (const json::exception& e) {
            send_problem(res, "BadRequest", e.what());
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            send_problem(res, "Internal", e.what());
        }
    };
}

} // namespace

int http_status_for(const std::string& code) {
    static const std::map<std::string, int> statuses{
        {"BadRequest", 400},         {"BadDocument", 400},        {"BadCsv", 400},
        {"CaseNotFound", 404},       {"TranscriptNotFound", 404}, {"NotFound", 404},
        {"CaseExists", 409},         {"NotComplete", 409},
        {"ValidationFailed", 422},   {"UnknownTemplate", 422},    {"UnknownRole", 422},
        {"UnknownSpecialty", 422},   {"UnknownEnumValue", 422},   {"BadMode", 422},
        {"EmptyQuestion", 422},      {"EmptyDocument", 422},      {"BadChunkParams", 422},
        {"EmptySeries", 422},        {"MissingSynthesis", 422},   {"AsOfBeforeAllData", 422},
        {"BadTemperaturePrecision", 422}, {"InvalidCase", 422},   {"NoAgentsAvailable", 422},
        {"AllZeroDifferences", 422}, {"EmptySample", 422},        {"RatingOutOfRange", 422},
        {"EmptyText", 422},          {"BadTimestamp", 422},
        {"SynthesisBackendFailure", 503}, {"AgentCallFailed", 503}, {"BackendError", 503},
        {"ServiceStopping", 503},
    };
    auto it = statuses.find(code);
    return it == statuses.end() ? 500 : it->second;
}

json problem(const std::string& code, const std::string& message, json detail) {
    return {{"code", code}, {"message", message}, {"detail", std::move(detail)}};
}

json profile_to_json(const AgentProfile& p) {
    json j{{"role", p.role.to_string()},
           {"display_name", p.display_name},
           {"team", to_string(p.team)},
           {"reasoning_style", to_string(p.reasoning_style)},
           {"temperature", p.temperature},
           {"output", p.output == OutputStyle::Clinical ? "clinical" : "patient_facing"},
           {"doctor", p.role.is_doctor()}};
    j["field"] = p.field.empty() ? json(nullptr) : json(p.field);
    return j;
}

json template_to_json(const PromptTemplate& t) {
    return {{"id", to_string(t.id)}, {"title", t.title}, {"body", t.body}};
}

json status_to_json(const ConsultationStatus& s) {
    json j{{"transcript_id", s.transcript_id}, {"case_id", s.case_id}, {"status", to_string(s.state)}};
    j["transcript"] = s.transcript ? transcript_to_json(*s.transcript) : json(nullptr);
    j["error"] = s.failure ? problem(s.failure->code, s.failure->message) : json(nullptr);
    return j;
}

json risk_to_json(const RiskEvaluation& r) {
    return {{"case_id", r.case_id},
            {"observed_at", format_instant(r.observed_at)},
            {"news", news::to_json(r.news)},
            {"recommendation", r.recommendation}};
}

json digest_to_json(const GapDigest& d) {
    return {{"unit_id", d.unit_id},
            {"case_ids", d.case_ids},
            {"gap_report", gap_report_to_json(d.report)},
            {"recipients", d.recipients}};
}

void mount_routes(httplib::Server& server, Service& service) {
    const std::string api = "/api/v1";
    // Every route pattern with its method, for the 405 fallback.
    auto routes = std::make_shared<std::vector<std::pair<std::string, std::regex>>>();
    auto get = [&](const std::string& pattern, httplib::Server::Handler h) {
        routes->emplace_back("GET", std::regex(pattern));
        server.Get(pattern, std::move(h));
    };
    auto post = [&](const std::string& pattern, httplib::Server::Handler h) {
        routes->emplace_back("POST", std::regex(pattern));
        server.Post(pattern, std::move(h));
    };

    get(api + "/health", guarded([&](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"status", "ok"}, {"backend", service.backend().name()}});
    }));

    // ---------------------------------------------------------------- cases
    post(api + "/cases", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        std::string unit = req.has_param("unit") ? req.get_param_value("unit") : std::string();
        const auto c = service.create_case(case_from_json(body), unit);
        send(res, 201, {{"case_id", c.case_id}});
    }));

    get(api + R"(/cases/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, case_to_json(service.get_case(req.matches[1])));
    }));

    post(api + R"(/cases/([^/]+)/vitals)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw Error("BadRequest", "request body is not valid JSON");
        std::vector<VitalSigns> vitals;
        if (body.is_array()) {
            for (const auto& v : body) vitals.push_back(vitals_from_json(v));
        } else {
            vitals.push_back(vitals_from_json(body));
        }
        const auto c = service.append_vitals(req.matches[1], vitals);
        send(res, 200, {{"case_id", c.case_id}, {"vitals_count", c.vitals.size()}});
    }));

    post(api + R"(/cases/([^/]+)/discharge-summary)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    const auto d = service.discharge_summary(req.matches[1]);
                    send(res, 200, {{"case_id", req.matches[1]}, {"text", d.text}, {"barriers", d.barriers}});
                }));

    // ---------------------------------------------------------------- consultations
    post(api + "/consultations", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        reject_unknown(body, {"case_id", "question", "template_id", "mode", "team", "idempotency_key"});
        ConsultationRequest r;
        r.case_id = str_field(body, "case_id");
        r.question = str_field(body, "question", false);
        if (auto t = str_field(body, "template_id", false); !t.empty()) r.template_id = t;
        if (auto m = str_field(body, "mode", false); !m.empty()) r.mode = enum_from_string<ConsultMode>(m);
        if (auto it = body.find("team"); it != body.end() && !it->is_null()) {
            if (!it->is_array()) throw Error("BadRequest", "field 'team' must be an array of roles");
            for (const auto& role : *it) r.team.push_back(AgentRole::parse(role.get<std::string>()));
        }
        r.idempotency_key = req.has_header("Idempotency-Key") ? req.get_header_value("Idempotency-Key")
                                                              : str_field(body, "idempotency_key", false);
        const auto accepted = service.submit_consultation(r);
        send(res, 202, {{"transcript_id", accepted.transcript_id}, {"status", "pending"}, {"replayed", accepted.replayed}});
    }));

    get(api + R"(/consultations/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, status_to_json(service.consultation(req.matches[1])));
    }));

    post(api + R"(/consultations/([^/]+)/followup)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    auto body = parse_body(req);
                    reject_unknown(body, {"question", "idempotency_key"});
                    const auto key = req.has_header("Idempotency-Key") ? req.get_header_value("Idempotency-Key")
                                                                       : str_field(body, "idempotency_key", false);
                    const auto accepted = service.submit_followup(req.matches[1], str_field(body, "question"), key);
                    send(res, 202, {{"transcript_id", accepted.transcript_id},
                                    {"status", "pending"},
                                    {"replayed", accepted.replayed},
                                    {"followup_of", req.matches[1]}});
                }));

    post(api + R"(/consultations/([^/]+)/navigator)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, {{"transcript_id", req.matches[1]}, {"text", service.navigator_explain(req.matches[1])}});
                }));

    post(api + "/specialist-consults", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        reject_unknown(body, {"case_id", "specialty", "question"});
        const auto t = service.specialist_consult(str_field(body, "case_id"), str_field(body, "specialty"),
                                                  str_field(body, "question", false));
        send(res, 201, transcript_to_json(t));
    }));

    // ---------------------------------------------------------------- catalog
    get(api + "/templates", guarded([&](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& t : service.registry().list_templates()) list.push_back(template_to_json(t));
        send(res, 200, {{"templates", list}});
    }));

    get(api + "/agents", guarded([&](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& p : service.registry().profiles()) list.push_back(profile_to_json(p));
        send(res, 200, {{"agents", list}});
    }));

    // ---------------------------------------------------------------- risk
    post(api + "/risk/evaluate", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        reject_unknown(body, {"case_id"});
        send(res, 200, risk_to_json(service.evaluate_risk(str_field(body, "case_id"))));
    }));

    get(api + R"(/risk/([^/]+)/alerts)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        json list = json::array();
        for (const auto& a : service.alerts(req.matches[1])) list.push_back(news::to_json(a));
        send(res, 200, {{"case_id", req.matches[1]}, {"alerts", list}});
    }));

    // ---------------------------------------------------------------- documents, units, stats
    post(api + "/documents", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        reject_unknown(body, {"doc_id", "title", "body", "chunk_size", "overlap"});
        const auto size = body.value("chunk_size", 1000);
        const auto overlap = body.value("overlap", 200);
        if (size <= 0 || overlap < 0) throw Error("BadChunkParams", "chunk_size must be positive and overlap non-negative");
        const auto doc_id = str_field(body, "doc_id");
        const auto title = str_field(body, "title", false);
        const auto chunks = service.ingest(doc_id, title.empty() ? doc_id : title, str_field(body, "body"),
                                           static_cast<std::size_t>(size), static_cast<std::size_t>(overlap));
        send(res, 201, {{"doc_id", doc_id}, {"chunks", chunks}});
    }));

    get(api + R"(/units/([^/]+)/gap-digest)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, digest_to_json(service.gap_digest(req.matches[1])));
    }));

    post(api + "/stats/wilcoxon", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        reject_unknown(body, {"samples", "mu"});
        const auto samples = body.at("samples").get<std::vector<double>>();
        const auto r = stats::wilcoxon_one_sample(samples, body.value("mu", 3.0));
        send(res, 200, {{"n_effective", r.n_effective},
                        {"w_plus", r.w_plus},
                        {"z", r.z},
                        {"p_two_sided", r.p_two_sided},
                        {"p_reported", stats::format_p(r.p_two_sided)},
                        {"method", "NormalApproxTieCorrected"}});
    }));

    post(api + "/stats/survey", guarded([&](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        reject_unknown(body, {"responses", "mu"});
        const auto responses = body.at("responses").get<std::map<std::string, std::vector<int>>>();
        json out = json::object();
        for (const auto& [q, s] : stats::summarize_survey(responses, body.value("mu", 3.0))) {
            json dist = json::object();
            for (const auto& [rating, count] : s.distribution) dist[std::to_string(rating)] = count;
            out[q] = {{"median", s.median},
                      {"distribution", dist},
                      {"test",
                       {{"n_effective", s.test.n_effective},
                        {"w_plus", s.test.w_plus},
                        {"z", s.test.z},
                        {"p_two_sided", s.test.p_two_sided},
                        {"p_reported", stats::format_p(s.test.p_two_sided)},
                        {"method", "NormalApproxTieCorrected"}}}};
        }
        send(res, 200, {{"questions", out}});
    }));

    // Known path, wrong method: 405 with an Allow header. Unknown path: 404.
    const auto fallback = [routes](const httplib::Request& req, httplib::Response& res) {
        std::string allow;
        for (const auto& [method, re] : *routes) {
            if (method != req.method && std::regex_match(req.path, re) && allow.find(method) == std::string::npos) {
                allow += (allow.empty() ? "" : ", ") + method;
            }
        }
        if (allow.empty()) {
            send(res, 404, problem("NotFound", "no route for " + req.method + " " + req.path));
            return;
        }
        res.set_header("Allow", allow);
        send(res, 405, problem("MethodNotAllowed", req.method + " not allowed on " + req.path));
    };
    server.Get(".*", fallback);
    server.Post(".*", fallback);
    server.Put(".*", fallback);
    server.Patch(".*", fallback);
    server.Delete(".*", fallback);

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        if (res.status == 404) {
            send(res, 404, problem("NotFound", "no route for " + req.method + " " + req.path));
        } else if (res.status == 405) {
            send(res, 405, problem("MethodNotAllowed", req.method + " not allowed on " + req.path));
        }
    });
}

} // namespace matec
