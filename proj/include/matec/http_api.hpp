#pragma once

// HTTP binding of the service. Errors become problem documents
// {code, message, detail} with a status derived from the error code.

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "matec/service.hpp"

namespace matec {

int http_status_for(const std::string& code);
nlohmann::json problem(const std::string& code, const std::string& message, nlohmann::json detail = nullptr);

void mount_routes(httplib::Server& server, Service& service);

// JSON shapes shared by the routes and the CLI.
nlohmann::json profile_to_json(const AgentProfile& p);
nlohmann::json template_to_json(const PromptTemplate& t);
nlohmann::json status_to_json(const ConsultationStatus& s);
nlohmann::json risk_to_json(const RiskEvaluation& r);
nlohmann::json digest_to_json(const GapDigest& d);

} // namespace matec
