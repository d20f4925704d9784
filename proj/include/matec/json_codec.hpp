#pragma once

// Versioned JSON interchange for the domain types. Top-level documents carry
// "schema_version": 1; field names mirror the C++ members in snake_case.
// Decoding rejects unknown keys and throws Error("BadDocument").

#include <initializer_list>
#include <string_view>

#include <json.hpp>

#include "matec/case_model.hpp"
#include "matec/domain.hpp"

namespace matec {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json case_to_json(const PatientCase& c);
PatientCase case_from_json(const Json& j);

Json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const Json& j);

Json vitals_to_json(const VitalSigns& v);
VitalSigns vitals_from_json(const Json& j);

Json response_to_json(const AgentResponse& r);
Json claim_to_json(const Claim& c);
Json synthesis_to_json(const SynthesisReport& s);
Json verification_to_json(const VerificationReport& v);
Json gap_report_to_json(const GapReport& g);
GapReport gap_report_from_json(const Json& j);
Json validation_to_json(const ValidationReport& r);

namespace json_util {

// Throws BadDocument if `j` is not an object or has keys outside `allowed`.
void expect_object(const Json& j, std::string_view path, std::initializer_list<std::string_view> allowed);

const Json& require(const Json& j, std::string_view key, std::string_view path);

} // namespace json_util

} // namespace matec
