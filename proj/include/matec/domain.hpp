#pragma once

// Shared clinical and consultation value types. Everything here is a plain
// immutable-by-convention value; no type owns a resource.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "matec/time.hpp"

namespace matec {

// ---------------------------------------------------------------- vitals

enum class Consciousness { Alert, Confusion, Voice, Pain, Unresponsive };
enum class Spo2Scale { Scale1, Scale2 };

// Temperature in tenths of a degree Celsius. Vitals carry one decimal place;
// finer input is rejected at the parsing boundary.
struct TenthsCelsius {
    int tenths = 370;

    static TenthsCelsius from_degrees(double degrees); // throws BadTemperaturePrecision
    double degrees() const { return tenths / 10.0; }
    auto operator<=>(const TenthsCelsius&) const = default;
};

struct VitalSigns {
    Instant timestamp{};
    int respiration_rate = 0;
    int spo2 = 0;
    bool on_supplemental_oxygen = false;
    Spo2Scale spo2_scale = Spo2Scale::Scale1;
    int systolic_bp = 0;
    int heart_rate = 0;
    Consciousness consciousness = Consciousness::Alert;
    TenthsCelsius temperature{};

    bool operator==(const VitalSigns&) const = default;
};

// ---------------------------------------------------------------- patient case

enum class Sex { Female, Male, Other, Unknown };
enum class Housing { Stable, Unstable, Homeless, Unknown };
enum class SubstanceUse { None, Active, InRecovery, Unknown };
enum class Insurance { Private, Medicare, Medicaid, Uninsured, Other, Unknown };

struct Demographics {
    int age = 0;
    Sex sex = Sex::Unknown;
    bool operator==(const Demographics&) const = default;
};

struct LabResult {
    std::string name;
    double value = 0;
    std::string unit;
    Instant timestamp{};
    bool operator==(const LabResult&) const = default;
};

struct MedicationOrder {
    std::string name;
    double dose = 0;
    std::string dose_unit;
    std::string route;
    std::string frequency;
    bool operator==(const MedicationOrder&) const = default;
};

struct SocialDeterminants {
    Housing housing = Housing::Unknown;
    SubstanceUse substance_use = SubstanceUse::Unknown;
    Insurance insurance = Insurance::Unknown;
    std::string support;
    bool operator==(const SocialDeterminants&) const = default;
};

struct PatientCase {
    std::string case_id;
    Demographics demographics;
    std::string chief_complaint;
    std::string history;
    std::vector<VitalSigns> vitals;
    std::vector<LabResult> labs;
    std::vector<MedicationOrder> medications;
    std::optional<std::string> current_plan;
    SocialDeterminants sdoh;

    bool operator==(const PatientCase&) const = default;
};

// ---------------------------------------------------------------- agents

enum class RoleKind {
    EmergencyMedicine,
    Hospitalist,
    InfectiousDisease,
    CriticalCare,
    SeniorPhysician,
    Nurse,
    Pharmacist,
    SocialWorker,
    PatientSafetyQI,
    RiskPrediction,
    PatientNavigator,
    CaseManager,
    Specialist,
};

struct AgentRole {
    RoleKind kind = RoleKind::Hospitalist;
    std::string specialty; // only for RoleKind::Specialist

    static AgentRole specialist(std::string name) { return {RoleKind::Specialist, std::move(name)}; }

    // "Hospitalist", "Specialist:Nephrologist"
    std::string to_string() const;
    static AgentRole parse(std::string_view text); // throws UnknownRole

    bool is_doctor() const;

    auto operator<=>(const AgentRole&) const = default;
};

enum class ConsultMode {
    TeamAssessment,
    CareGap,
    DifferentialDx,
    TreatmentPlan,
    AntibioticMgmt,
    PharmacyAssessment,
    SpecialistConsult,
    NavigatorExplain,
    DischargeSummary,
};

// The first six modes are team modes served by the template catalog.
bool is_team_mode(ConsultMode mode);

enum class ClaimSubject { Vital, Lab, Medication, HistoryFact };

struct Claim {
    ClaimSubject subject = ClaimSubject::Vital;
    std::string name;
    std::string asserted_value;
    std::optional<double> numeric_value; // set iff asserted_value parses as a number
    AgentRole source_role;

    static Claim make(ClaimSubject subject, std::string name, std::string value, AgentRole source);
    bool operator==(const Claim&) const = default;
};

struct DiagnosisItem {
    std::string condition;
    std::string reasoning;
    bool operator==(const DiagnosisItem&) const = default;
};

struct StructuredResponse {
    std::string assessment;
    std::vector<DiagnosisItem> differential; // most likely first
    std::vector<std::string> plan;
    std::vector<Claim> claims;
    bool operator==(const StructuredResponse&) const = default;
};

enum class ResponseStatus { Ok, TimedOut, Malformed, BackendError };

struct AgentResponse {
    AgentRole role;
    StructuredResponse sections;
    std::int64_t latency_ms = 0;
    ResponseStatus status = ResponseStatus::Ok;
    bool operator==(const AgentResponse&) const = default;
};

// ---------------------------------------------------------------- reports

struct DivergenceTopic {
    std::string topic;
    std::map<AgentRole, std::string> positions;
    bool operator==(const DivergenceTopic&) const = default;
};

struct SynthesisReport {
    std::string final_diagnosis;
    std::vector<std::string> consensus;
    std::vector<DivergenceTopic> divergence;
    std::vector<std::string> care_plan;
    std::vector<std::string> next_steps;
    std::set<AgentRole> contributing_roles;
    std::vector<Claim> claims;
    bool operator==(const SynthesisReport&) const = default;
};

enum class FlagReason { NotInRecord, ValueMismatch, UnsupportedByContext };

struct VerificationFlag {
    Claim claim;
    FlagReason reason = FlagReason::NotInRecord;
    std::optional<std::string> record_value; // present for ValueMismatch
    bool operator==(const VerificationFlag&) const = default;
};

enum class Verdict { Clean, Flagged };

struct VerificationReport {
    int checked = 0;
    std::vector<VerificationFlag> flags;
    Verdict verdict = Verdict::Clean;
    bool operator==(const VerificationReport&) const = default;
};

enum class GapCategory { Diagnosis, Treatment, Monitoring, Coordination };

struct GapFinding {
    std::string finding;
    std::set<AgentRole> raised_by;
    bool operator==(const GapFinding&) const = default;
};

struct GapReport {
    std::map<GapCategory, std::vector<GapFinding>> categories;
    std::string summary;
    bool operator==(const GapReport&) const = default;
};

struct Transcript {
    std::string transcript_id;
    std::string case_id;
    std::string question;
    ConsultMode mode = ConsultMode::TeamAssessment;
    std::vector<AgentResponse> responses;
    std::optional<SynthesisReport> synthesis;
    std::optional<VerificationReport> verification;
    std::optional<GapReport> gap_report;
    Instant created_at{};
    // Set when fewer than two doctor agents answered and synthesis was skipped.
    bool degraded_team = false;
    std::optional<std::string> followup_of;

    bool operator==(const Transcript&) const = default;
};

// ---------------------------------------------------------------- enum names

std::string_view to_string(Consciousness v);
std::string_view to_string(Spo2Scale v);
std::string_view to_string(Sex v);
std::string_view to_string(Housing v);
std::string_view to_string(SubstanceUse v);
std::string_view to_string(Insurance v);
std::string_view to_string(ConsultMode v);
std::string_view to_string(ClaimSubject v);
std::string_view to_string(ResponseStatus v);
std::string_view to_string(FlagReason v);
std::string_view to_string(Verdict v);
std::string_view to_string(GapCategory v);

// Parses the names above; throws matec::Error("UnknownEnumValue").
template <typename E> E enum_from_string(std::string_view text);

} // namespace matec
