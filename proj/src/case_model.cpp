#include "matec/case_model.hpp"

#include <algorithm>
#include <sstream>

#include "matec/error.hpp"
#include "matec/text.hpp"

namespace matec {

ValidationReport validate_vitals(const VitalSigns& v, const std::string& path) {
    ValidationReport out;
    auto bad = [&](const char* field, std::string msg) { out.push_back({path + "." + field, std::move(msg)}); };
    if (v.respiration_rate < 0) bad("respiration_rate", "must be >= 0");
    if (v.spo2 < 0 || v.spo2 > 100) bad("spo2", "must be within [0, 100]");
    if (v.systolic_bp < 0) bad("systolic_bp", "must be >= 0");
    if (v.heart_rate < 0) bad("heart_rate", "must be >= 0");
    if (v.temperature.tenths < 200 || v.temperature.tenths > 450) bad("temperature", "must be within [20.0, 45.0]");
    return out;
}

ValidationReport validate_case(const PatientCase& c) {
    ValidationReport out;
    if (text::trim(c.case_id).empty()) out.push_back({"case_id", "must be nonempty"});
    if (c.demographics.age < 0 || c.demographics.age > 130) {
        out.push_back({"demographics.age", "must be within [0, 130]"});
    }
    for (size_t i = 0; i < c.vitals.size(); ++i) {
        const auto path = "vitals[" + std::to_string(i) + "]";
        auto found = validate_vitals(c.vitals[i], path);
        out.insert(out.end(), found.begin(), found.end());
        if (i > 0 && c.vitals[i].timestamp <= c.vitals[i - 1].timestamp) {
            out.push_back({path + ".timestamp", "vitals timestamps must be strictly increasing"});
        }
    }
    for (size_t i = 0; i < c.labs.size(); ++i) {
        const auto path = "labs[" + std::to_string(i) + "]";
        if (text::trim(c.labs[i].name).empty()) out.push_back({path + ".name", "must be nonempty"});
        if (text::trim(c.labs[i].unit).empty()) out.push_back({path + ".unit", "must be nonempty"});
    }
    for (size_t i = 0; i < c.medications.size(); ++i) {
        const auto path = "medications[" + std::to_string(i) + "]";
        if (text::trim(c.medications[i].name).empty()) out.push_back({path + ".name", "must be nonempty"});
        if (c.medications[i].dose < 0) out.push_back({path + ".dose", "must be >= 0"});
    }
    return out;
}

const VitalSigns* latest_vitals(const PatientCase& c, Instant as_of) {
    const VitalSigns* best = nullptr;
    for (const auto& v : c.vitals) {
        if (v.timestamp <= as_of && (best == nullptr || v.timestamp > best->timestamp)) best = &v;
    }
    return best;
}

std::vector<std::string> sdoh_flags(const SocialDeterminants& s) {
    std::vector<std::string> flags;
    if (s.housing == Housing::Homeless) flags.emplace_back("homelessness");
    if (s.housing == Housing::Unstable) flags.emplace_back("unstable housing");
    if (s.substance_use == SubstanceUse::Active) flags.emplace_back("active substance use");
    if (s.substance_use == SubstanceUse::InRecovery) flags.emplace_back("substance use in recovery");
    if (s.insurance == Insurance::Uninsured) flags.emplace_back("uninsured");
    return flags;
}

std::string render_case_summary(const PatientCase& c, Instant as_of) {
    const VitalSigns* v = latest_vitals(c, as_of);
    if (v == nullptr) {
        throw Error("AsOfBeforeAllData", "no vitals recorded at or before " + format_instant(as_of));
    }

    std::ostringstream out;
    out << "CASE: " << c.case_id << '\n';
    out << "AS OF: " << format_instant(as_of) << '\n';
    out << "DEMOGRAPHICS: age " << c.demographics.age << ", sex " << to_string(c.demographics.sex) << '\n';
    out << "CHIEF COMPLAINT: " << c.chief_complaint << '\n';
    out << "HISTORY: " << c.history << '\n';

    out << "VITALS @ " << format_instant(v->timestamp) << ":\n";
    out << "  respiration_rate: " << v->respiration_rate << '\n';
    out << "  spo2: " << v->spo2 << '\n';
    out << "  on_supplemental_oxygen: " << (v->on_supplemental_oxygen ? "yes" : "no") << '\n';
    out << "  spo2_scale: " << to_string(v->spo2_scale) << '\n';
    out << "  systolic_bp: " << v->systolic_bp << '\n';
    out << "  heart_rate: " << v->heart_rate << '\n';
    out << "  consciousness: " << to_string(v->consciousness) << '\n';
    out << "  temperature: " << text::format_number(v->temperature.degrees()) << '\n';

    std::vector<const LabResult*> labs;
    for (const auto& l : c.labs) labs.push_back(&l);
    std::stable_sort(labs.begin(), labs.end(), [](const LabResult* a, const LabResult* b) {
        if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
        return a->name < b->name;
    });
    out << "LABS:\n";
    if (labs.empty()) out << "  (none)\n";
    for (const auto* l : labs) {
        out << "  " << l->name << ": " << text::format_number(l->value) << ' ' << l->unit << " @ "
            << format_instant(l->timestamp) << '\n';
    }

    out << "MEDICATIONS:\n";
    if (c.medications.empty()) out << "  (none)\n";
    for (const auto& m : c.medications) {
        out << "  " << m.name << ": " << text::format_number(m.dose) << ' ' << m.dose_unit << ' ' << m.route << ' '
            << m.frequency << '\n';
    }

    out << "CURRENT PLAN: " << (c.current_plan ? *c.current_plan : std::string("(none documented)")) << '\n';

    out << "SDOH:\n";
    out << "  housing: " << to_string(c.sdoh.housing) << '\n';
    out << "  substance_use: " << to_string(c.sdoh.substance_use) << '\n';
    out << "  insurance: " << to_string(c.sdoh.insurance) << '\n';
    out << "  support: " << (c.sdoh.support.empty() ? std::string("(not documented)") : c.sdoh.support) << '\n';
    const auto flags = sdoh_flags(c.sdoh);
    out << "  flags: ";
    if (flags.empty()) out << "none";
    for (size_t i = 0; i < flags.size(); ++i) out << (i ? "; " : "") << flags[i];
    out << '\n';
    return out.str();
}

} // namespace matec
