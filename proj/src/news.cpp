#include "matec/news.hpp"

#include <algorithm>
#include <array>
#include <climits>

#include "matec/error.hpp"

namespace matec::news {

namespace {

// Closed integer band [lo, hi] -> points.
struct Band {
    int lo;
    int hi;
    int points;
};

template <size_t N> int lookup(const std::array<Band, N>& table, int value) {
    for (const auto& b : table) {
        if (value >= b.lo && value <= b.hi) return b.points;
    }
    return 0;
}

constexpr std::array<Band, 5> kRespiration{{
    {INT_MIN, 8, 3}, {9, 11, 1}, {12, 20, 0}, {21, 24, 2}, {25, INT_MAX, 3}}};

constexpr std::array<Band, 4> kSpo2Scale1{{{INT_MIN, 91, 3}, {92, 93, 2}, {94, 95, 1}, {96, INT_MAX, 0}}};

// Scale 2 below 88 and the 88-92 target range apply regardless of oxygen.
constexpr std::array<Band, 4> kSpo2Scale2Low{{{INT_MIN, 83, 3}, {84, 85, 2}, {86, 87, 1}, {88, 92, 0}}};
constexpr std::array<Band, 3> kSpo2Scale2OnOxygen{{{93, 94, 1}, {95, 96, 2}, {97, INT_MAX, 3}}};

constexpr std::array<Band, 5> kSystolic{{
    {INT_MIN, 90, 3}, {91, 100, 2}, {101, 110, 1}, {111, 219, 0}, {220, INT_MAX, 3}}};

constexpr std::array<Band, 6> kHeartRate{{
    {INT_MIN, 40, 3}, {41, 50, 1}, {51, 90, 0}, {91, 110, 1}, {111, 130, 2}, {131, INT_MAX, 3}}};

// Tenths of a degree.
constexpr std::array<Band, 5> kTemperature{{
    {INT_MIN, 350, 3}, {351, 360, 1}, {361, 380, 0}, {381, 390, 1}, {391, INT_MAX, 2}}};

constexpr std::array<std::string_view, 4> kBandNames{"Low", "LowMedium", "Medium", "High"};

} // namespace

std::string_view to_string(RiskBand band) { return kBandNames[static_cast<size_t>(band)]; }

RiskBand band_from_string(std::string_view s) {
    for (size_t i = 0; i < kBandNames.size(); ++i) {
        if (kBandNames[i] == s) return static_cast<RiskBand>(i);
    }
    throw Error("UnknownEnumValue", "unknown risk band: " + std::string(s));
}

int Subscores::max() const {
    return std::max({respiration, spo2, oxygen, systolic_bp, heart_rate, consciousness, temperature});
}

int score_respiration(int v) { return lookup(kRespiration, v); }
int score_spo2_scale1(int v) { return lookup(kSpo2Scale1, v); }

int score_spo2_scale2(int v, bool on_oxygen) {
    if (v <= 92) return lookup(kSpo2Scale2Low, v);
    return on_oxygen ? lookup(kSpo2Scale2OnOxygen, v) : 0;
}

int score_systolic_bp(int v) { return lookup(kSystolic, v); }
int score_heart_rate(int v) { return lookup(kHeartRate, v); }
int score_consciousness(Consciousness c) { return c == Consciousness::Alert ? 0 : 3; }
int score_temperature(TenthsCelsius t) { return lookup(kTemperature, t.tenths); }

RiskBand band_for(int total, int max_subscore) {
    if (total >= 7) return RiskBand::High;
    if (total >= 5) return RiskBand::Medium;
    if (max_subscore == 3) return RiskBand::LowMedium;
    return RiskBand::Low;
}

NewsResult compute_news(const VitalSigns& v) {
    NewsResult r;
    r.scale_used = v.spo2_scale;
    auto& s = r.subscores;
    s.respiration = score_respiration(v.respiration_rate);
    s.spo2 = v.spo2_scale == Spo2Scale::Scale2 ? score_spo2_scale2(v.spo2, v.on_supplemental_oxygen)
                                               : score_spo2_scale1(v.spo2);
    s.oxygen = v.on_supplemental_oxygen ? 2 : 0;
    s.systolic_bp = score_systolic_bp(v.systolic_bp);
    s.heart_rate = score_heart_rate(v.heart_rate);
    s.consciousness = score_consciousness(v.consciousness);
    s.temperature = score_temperature(v.temperature);
    r.total = s.sum();
    r.band = band_for(r.total, s.max());
    return r;
}

std::string_view recommendation_for(RiskBand band) {
    switch (band) {
    case RiskBand::Low:
        return "Continue routine monitoring; minimum 12-hourly observations.";
    case RiskBand::LowMedium:
        return "Single parameter in the red zone: urgent ward-based review by a clinician; minimum hourly "
               "observations.";
    case RiskBand::Medium:
        return "Key threshold reached: urgent review by a clinician competent in acute illness; consider sepsis "
               "evaluation; minimum hourly observations.";
    case RiskBand::High:
        return "Emergency response: immediate assessment by a critical care team; consider transfer to a higher "
               "level of care; continuous monitoring.";
    }
    return {};
}

std::vector<MonitorAlert> evaluate_trend(std::string_view case_id, std::span<const VitalSigns> series) {
    if (series.empty()) throw Error("EmptySeries", "trend evaluation needs at least one observation");
    std::vector<MonitorAlert> alerts;
    NewsResult previous = compute_news(series.front());
    for (size_t i = 1; i < series.size(); ++i) {
        NewsResult current = compute_news(series[i]);
        if (current.band > previous.band) {
            alerts.push_back(MonitorAlert{std::string(case_id), series[i].timestamp, previous.band, current.band,
                                          current, std::string(recommendation_for(current.band))});
        }
        previous = current;
    }
    return alerts;
}

nlohmann::json to_json(const NewsResult& r) {
    const auto& s = r.subscores;
    return {{"subscores",
             {{"respiration", s.respiration},
              {"spo2", s.spo2},
              {"oxygen", s.oxygen},
              {"systolic_bp", s.systolic_bp},
              {"heart_rate", s.heart_rate},
              {"consciousness", s.consciousness},
              {"temperature", s.temperature}}},
            {"total", r.total},
            {"band", to_string(r.band)},
            {"scale_used", matec::to_string(r.scale_used)}};
}

nlohmann::json to_json(const MonitorAlert& a) {
    return {{"case_id", a.case_id},
            {"at", format_instant(a.at)},
            {"previous_band", to_string(a.previous_band)},
            {"new_band", to_string(a.new_band)},
            {"news", to_json(a.news)},
            {"recommendation", a.recommendation}};
}

MonitorAlert alert_from_json(const nlohmann::json& j) {
    MonitorAlert a;
    a.case_id = j.at("case_id").get<std::string>();
    a.at = parse_instant(j.at("at").get<std::string>());
    a.previous_band = band_from_string(j.at("previous_band").get<std::string>());
    a.new_band = band_from_string(j.at("new_band").get<std::string>());
    const auto& n = j.at("news");
    const auto& s = n.at("subscores");
    a.news.subscores = Subscores{s.at("respiration").get<int>(),   s.at("spo2").get<int>(),
                                 s.at("oxygen").get<int>(),        s.at("systolic_bp").get<int>(),
                                 s.at("heart_rate").get<int>(),    s.at("consciousness").get<int>(),
                                 s.at("temperature").get<int>()};
    a.news.total = n.at("total").get<int>();
    a.news.band = band_from_string(n.at("band").get<std::string>());
    a.news.scale_used = enum_from_string<Spo2Scale>(n.at("scale_used").get<std::string>());
    a.recommendation = j.at("recommendation").get<std::string>();
    return a;
}

} // namespace matec::news
