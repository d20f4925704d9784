#pragma once

// NEWS2 early-warning scoring and interval-based deterioration monitoring.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matec/domain.hpp"

namespace matec::news {

enum class RiskBand { Low, LowMedium, Medium, High };

std::string_view to_string(RiskBand band);
RiskBand band_from_string(std::string_view s);

struct Subscores {
    int respiration = 0;
    int spo2 = 0;
    int oxygen = 0;
    int systolic_bp = 0;
    int heart_rate = 0;
    int consciousness = 0;
    int temperature = 0;

    int sum() const { return respiration + spo2 + oxygen + systolic_bp + heart_rate + consciousness + temperature; }
    int max() const;
    bool operator==(const Subscores&) const = default;
};

struct NewsResult {
    Subscores subscores;
    int total = 0;
    RiskBand band = RiskBand::Low;
    Spo2Scale scale_used = Spo2Scale::Scale1;
    bool operator==(const NewsResult&) const = default;
};

struct MonitorAlert {
    std::string case_id;
    Instant at{};
    RiskBand previous_band = RiskBand::Low;
    RiskBand new_band = RiskBand::Low;
    NewsResult news;
    std::string recommendation;
    bool operator==(const MonitorAlert&) const = default;
};

// Per-parameter scores, exactly as the NEWS2 chart reads.
int score_respiration(int breaths_per_min);
int score_spo2_scale1(int spo2);
int score_spo2_scale2(int spo2, bool on_oxygen);
int score_systolic_bp(int mmhg);
int score_heart_rate(int bpm);
int score_consciousness(Consciousness c);
int score_temperature(TenthsCelsius t);

RiskBand band_for(int total, int max_subscore);

// Precondition: `v` satisfies the VitalSigns invariants.
NewsResult compute_news(const VitalSigns& v);

// Fixed per-band recommendation text.
std::string_view recommendation_for(RiskBand band);

// One alert per strict band escalation between consecutive observations.
// `series` must be time ordered. Throws Error("EmptySeries") when empty.
std::vector<MonitorAlert> evaluate_trend(std::string_view case_id, std::span<const VitalSigns> series);

nlohmann::json to_json(const NewsResult& r);
nlohmann::json to_json(const MonitorAlert& a);
MonitorAlert alert_from_json(const nlohmann::json& j);

} // namespace matec::news
