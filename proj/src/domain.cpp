#include "matec/domain.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "matec/error.hpp"
#include "matec/text.hpp"

namespace matec {

TenthsCelsius TenthsCelsius::from_degrees(double degrees) {
    const double scaled = degrees * 10.0;
    const double rounded = std::round(scaled);
    if (!std::isfinite(scaled) || std::abs(scaled - rounded) > 1e-6) {
        throw Error("BadTemperaturePrecision",
                    "temperature must have at most one decimal place: " + text::format_number(degrees));
    }
    return TenthsCelsius{static_cast<int>(rounded)};
}

namespace {

template <typename E, size_t N> using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Consciousness, 5> kConsciousness{{
    {Consciousness::Alert, "Alert"},
    {Consciousness::Confusion, "Confusion"},
    {Consciousness::Voice, "Voice"},
    {Consciousness::Pain, "Pain"},
    {Consciousness::Unresponsive, "Unresponsive"},
}};
constexpr NameTable<Spo2Scale, 2> kScale{{{Spo2Scale::Scale1, "Scale1"}, {Spo2Scale::Scale2, "Scale2"}}};
constexpr NameTable<Sex, 4> kSex{{
    {Sex::Female, "Female"}, {Sex::Male, "Male"}, {Sex::Other, "Other"}, {Sex::Unknown, "Unknown"}}};
constexpr NameTable<Housing, 4> kHousing{{
    {Housing::Stable, "Stable"},
    {Housing::Unstable, "Unstable"},
    {Housing::Homeless, "Homeless"},
    {Housing::Unknown, "Unknown"},
}};
constexpr NameTable<SubstanceUse, 4> kSubstance{{
    {SubstanceUse::None, "None"},
    {SubstanceUse::Active, "Active"},
    {SubstanceUse::InRecovery, "InRecovery"},
    {SubstanceUse::Unknown, "Unknown"},
}};
constexpr NameTable<Insurance, 6> kInsurance{{
    {Insurance::Private, "Private"},
    {Insurance::Medicare, "Medicare"},
    {Insurance::Medicaid, "Medicaid"},
    {Insurance::Uninsured, "Uninsured"},
    {Insurance::Other, "Other"},
    {Insurance::Unknown, "Unknown"},
}};
constexpr NameTable<ConsultMode, 9> kMode{{
    {ConsultMode::TeamAssessment, "TeamAssessment"},
    {ConsultMode::CareGap, "CareGap"},
    {ConsultMode::DifferentialDx, "DifferentialDx"},
    {ConsultMode::TreatmentPlan, "TreatmentPlan"},
    {ConsultMode::AntibioticMgmt, "AntibioticMgmt"},
    {ConsultMode::PharmacyAssessment, "PharmacyAssessment"},
    {ConsultMode::SpecialistConsult, "SpecialistConsult"},
    {ConsultMode::NavigatorExplain, "NavigatorExplain"},
    {ConsultMode::DischargeSummary, "DischargeSummary"},
}};
constexpr NameTable<ClaimSubject, 4> kSubject{{
    {ClaimSubject::Vital, "Vital"},
    {ClaimSubject::Lab, "Lab"},
    {ClaimSubject::Medication, "Medication"},
    {ClaimSubject::HistoryFact, "HistoryFact"},
}};
constexpr NameTable<ResponseStatus, 4> kStatus{{
    {ResponseStatus::Ok, "Ok"},
    {ResponseStatus::TimedOut, "TimedOut"},
    {ResponseStatus::Malformed, "Malformed"},
    {ResponseStatus::BackendError, "BackendError"},
}};
constexpr NameTable<FlagReason, 3> kReason{{
    {FlagReason::NotInRecord, "NotInRecord"},
    {FlagReason::ValueMismatch, "ValueMismatch"},
    {FlagReason::UnsupportedByContext, "UnsupportedByContext"},
}};
constexpr NameTable<Verdict, 2> kVerdict{{{Verdict::Clean, "Clean"}, {Verdict::Flagged, "Flagged"}}};
constexpr NameTable<GapCategory, 4> kGap{{
    {GapCategory::Diagnosis, "Diagnosis"},
    {GapCategory::Treatment, "Treatment"},
    {GapCategory::Monitoring, "Monitoring"},
    {GapCategory::Coordination, "Coordination"},
}};
constexpr NameTable<RoleKind, 12> kRole{{
    {RoleKind::EmergencyMedicine, "EmergencyMedicine"},
    {RoleKind::Hospitalist, "Hospitalist"},
    {RoleKind::InfectiousDisease, "InfectiousDisease"},
    {RoleKind::CriticalCare, "CriticalCare"},
    {RoleKind::SeniorPhysician, "SeniorPhysician"},
    {RoleKind::Nurse, "Nurse"},
    {RoleKind::Pharmacist, "Pharmacist"},
    {RoleKind::SocialWorker, "SocialWorker"},
    {RoleKind::PatientSafetyQI, "PatientSafetyQI"},
    {RoleKind::RiskPrediction, "RiskPrediction"},
    {RoleKind::PatientNavigator, "PatientNavigator"},
    {RoleKind::CaseManager, "CaseManager"},
}};

template <typename E, size_t N> std::string_view name_of(const NameTable<E, N>& table, E v) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

template <typename E, size_t N> E value_of(const NameTable<E, N>& table, std::string_view name) {
    for (const auto& [value, n] : table) {
        if (n == name) return value;
    }
    throw Error("UnknownEnumValue", "unknown enum value: " + std::string(name));
}

constexpr std::string_view kSpecialistPrefix = "Specialist:";

} // namespace

std::string_view to_string(Consciousness v) { return name_of(kConsciousness, v); }
std::string_view to_string(Spo2Scale v) { return name_of(kScale, v); }
std::string_view to_string(Sex v) { return name_of(kSex, v); }
std::string_view to_string(Housing v) { return name_of(kHousing, v); }
std::string_view to_string(SubstanceUse v) { return name_of(kSubstance, v); }
std::string_view to_string(Insurance v) { return name_of(kInsurance, v); }
std::string_view to_string(ConsultMode v) { return name_of(kMode, v); }
std::string_view to_string(ClaimSubject v) { return name_of(kSubject, v); }
std::string_view to_string(ResponseStatus v) { return name_of(kStatus, v); }
std::string_view to_string(FlagReason v) { return name_of(kReason, v); }
std::string_view to_string(Verdict v) { return name_of(kVerdict, v); }
std::string_view to_string(GapCategory v) { return name_of(kGap, v); }

template <> Consciousness enum_from_string(std::string_view s) { return value_of(kConsciousness, s); }
template <> Spo2Scale enum_from_string(std::string_view s) { return value_of(kScale, s); }
template <> Sex enum_from_string(std::string_view s) { return value_of(kSex, s); }
template <> Housing enum_from_string(std::string_view s) { return value_of(kHousing, s); }
template <> SubstanceUse enum_from_string(std::string_view s) { return value_of(kSubstance, s); }
template <> Insurance enum_from_string(std::string_view s) { return value_of(kInsurance, s); }
template <> ConsultMode enum_from_string(std::string_view s) { return value_of(kMode, s); }
template <> ClaimSubject enum_from_string(std::string_view s) { return value_of(kSubject, s); }
template <> ResponseStatus enum_from_string(std::string_view s) { return value_of(kStatus, s); }
template <> FlagReason enum_from_string(std::string_view s) { return value_of(kReason, s); }
template <> Verdict enum_from_string(std::string_view s) { return value_of(kVerdict, s); }
template <> GapCategory enum_from_string(std::string_view s) { return value_of(kGap, s); }

std::string AgentRole::to_string() const {
    if (kind == RoleKind::Specialist) return std::string(kSpecialistPrefix) + specialty;
    return std::string(name_of(kRole, kind));
}

AgentRole AgentRole::parse(std::string_view text) {
    if (text.starts_with(kSpecialistPrefix)) {
        auto name = text.substr(kSpecialistPrefix.size());
        if (name.empty()) throw Error("UnknownRole", "specialist role without a specialty");
        return specialist(std::string(name));
    }
    for (const auto& [value, name] : kRole) {
        if (name == text) return AgentRole{value, {}};
    }
    throw Error("UnknownRole", "unknown agent role: " + std::string(text));
}

bool AgentRole::is_doctor() const {
    switch (kind) {
    case RoleKind::EmergencyMedicine:
    case RoleKind::Hospitalist:
    case RoleKind::InfectiousDisease:
    case RoleKind::CriticalCare:
    case RoleKind::SeniorPhysician:
    case RoleKind::Specialist:
        return true;
    default:
        return false;
    }
}

bool is_team_mode(ConsultMode mode) {
    return static_cast<int>(mode) <= static_cast<int>(ConsultMode::PharmacyAssessment);
}

Claim Claim::make(ClaimSubject subject, std::string name, std::string value, AgentRole source) {
    Claim c;
    c.subject = subject;
    c.name = std::move(name);
    c.numeric_value = text::parse_number(value);
    c.asserted_value = std::move(value);
    c.source_role = std::move(source);
    return c;
}

} // namespace matec
