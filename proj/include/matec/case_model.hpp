#pragma once

#include <string>
#include <vector>

#include "matec/domain.hpp"

namespace matec {

struct Violation {
    std::string path;    // e.g. "vitals[2].spo2"
    std::string message;
    bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

// Every invariant violation in the case; empty means valid. Pure.
ValidationReport validate_case(const PatientCase& c);

// Violations for a single observation; `path` prefixes each field path.
ValidationReport validate_vitals(const VitalSigns& v, const std::string& path);

// Most recent vitals with timestamp <= as_of, or nullptr.
const VitalSigns* latest_vitals(const PatientCase& c, Instant as_of);

// Canonical case rendering inserted into every agent prompt. Sections appear in
// a fixed order; labs are listed by timestamp then name.
// Throws Error("AsOfBeforeAllData") when no vitals precede `as_of`.
std::string render_case_summary(const PatientCase& c, Instant as_of);

// SDOH items that warrant a social-work or discharge-planning follow-up.
std::vector<std::string> sdoh_flags(const SocialDeterminants& s);

} // namespace matec
