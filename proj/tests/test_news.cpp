#include <doctest.h>

#include <random>

#include "matec/error.hpp"
#include "matec/news.hpp"
#include "news_oracle.hpp"

using namespace matec;
using namespace matec::news;
namespace chart = testing::chart;

namespace {

VitalSigns baseline() {
    VitalSigns v;
    v.respiration_rate = 16;
    v.spo2 = 97;
    v.systolic_bp = 120;
    v.heart_rate = 75;
    v.temperature = TenthsCelsius{370};
    return v;
}

void expect_agrees(const VitalSigns& v) {
    const auto expected = chart::score(v);
    const auto got = compute_news(v);
    REQUIRE(got.total == expected.total);
    REQUIRE(got.band == expected.band);
    REQUIRE(got.subscores.sum() == got.total);
    REQUIRE(got.scale_used == v.spo2_scale);
}

} // namespace

TEST_CASE("worked examples") {
    auto v = baseline();
    CHECK(compute_news(v).total == 0);
    CHECK(compute_news(v).band == RiskBand::Low);

    // RR 24, SpO2 93, SBP 98, HR 118, T 39.2 on air, alert: 2 + 2 + 0 + 2 + 2 + 0 + 2.
    v.respiration_rate = 24;
    v.spo2 = 93;
    v.systolic_bp = 98;
    v.heart_rate = 118;
    v.temperature = TenthsCelsius{392};
    const auto r = compute_news(v);
    CHECK(r.total == 10);
    CHECK(r.band == RiskBand::High);
    CHECK(r.subscores.respiration == 2);
    CHECK(r.subscores.spo2 == 2);
    CHECK(r.subscores.systolic_bp == 2);
    CHECK(r.subscores.heart_rate == 2);
    CHECK(r.subscores.temperature == 2);
}

TEST_CASE("a single red parameter lifts a low total to LowMedium") {
    auto v = baseline();
    v.consciousness = Consciousness::Confusion;
    const auto r = compute_news(v);
    CHECK(r.total == 3);
    CHECK(r.band == RiskBand::LowMedium);
}

TEST_CASE("band thresholds") {
    CHECK(band_for(0, 0) == RiskBand::Low);
    CHECK(band_for(4, 2) == RiskBand::Low);
    CHECK(band_for(3, 3) == RiskBand::LowMedium);
    CHECK(band_for(5, 3) == RiskBand::Medium);
    CHECK(band_for(6, 2) == RiskBand::Medium);
    CHECK(band_for(7, 2) == RiskBand::High);
}

TEST_CASE("scale 2 only scores high saturations when on oxygen") {
    CHECK(score_spo2_scale2(97, false) == 0);
    CHECK(score_spo2_scale2(97, true) == 3);
    CHECK(score_spo2_scale2(93, true) == 1);
    CHECK(score_spo2_scale2(88, true) == 0);
    CHECK(score_spo2_scale2(83, false) == 3);
}

TEST_CASE("every integer boundary of every parameter agrees with the chart") {
    // Each parameter is swept across its whole plausible range, which covers
    // every boundary and its neighbours, with the others held normal.
    for (bool oxygen : {false, true}) {
        for (auto scale : {Spo2Scale::Scale1, Spo2Scale::Scale2}) {
            for (int x = 0; x <= 80; ++x) {
                auto v = baseline();
                v.on_supplemental_oxygen = oxygen;
                v.spo2_scale = scale;
                v.respiration_rate = x;
                expect_agrees(v);
            }
            for (int x = 0; x <= 100; ++x) {
                auto v = baseline();
                v.on_supplemental_oxygen = oxygen;
                v.spo2_scale = scale;
                v.spo2 = x;
                expect_agrees(v);
            }
            for (int x = 0; x <= 300; ++x) {
                auto v = baseline();
                v.on_supplemental_oxygen = oxygen;
                v.spo2_scale = scale;
                v.systolic_bp = x;
                expect_agrees(v);
                v = baseline();
                v.on_supplemental_oxygen = oxygen;
                v.spo2_scale = scale;
                v.heart_rate = x;
                expect_agrees(v);
            }
            for (int x = 200; x <= 450; ++x) {
                auto v = baseline();
                v.on_supplemental_oxygen = oxygen;
                v.spo2_scale = scale;
                v.temperature = TenthsCelsius{x};
                expect_agrees(v);
            }
            for (int c = 0; c <= 4; ++c) {
                auto v = baseline();
                v.on_supplemental_oxygen = oxygen;
                v.spo2_scale = scale;
                v.consciousness = static_cast<Consciousness>(c);
                expect_agrees(v);
            }
        }
    }
}

TEST_CASE("explicit boundary points") {
    CHECK(score_respiration(8) == 3);
    CHECK(score_respiration(9) == 1);
    CHECK(score_respiration(11) == 1);
    CHECK(score_respiration(12) == 0);
    CHECK(score_respiration(20) == 0);
    CHECK(score_respiration(21) == 2);
    CHECK(score_respiration(24) == 2);
    CHECK(score_respiration(25) == 3);
    CHECK(score_systolic_bp(219) == 0);
    CHECK(score_systolic_bp(220) == 3);
    CHECK(score_heart_rate(40) == 3);
    CHECK(score_heart_rate(41) == 1);
    CHECK(score_heart_rate(131) == 3);
    CHECK(score_temperature(TenthsCelsius{350}) == 3);
    CHECK(score_temperature(TenthsCelsius{351}) == 1);
    CHECK(score_temperature(TenthsCelsius{381}) == 1);
    CHECK(score_temperature(TenthsCelsius{391}) == 2);
}

TEST_CASE("10000 random valid vitals agree with the chart") {
    std::mt19937_64 rng(20240301);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int i = 0; i < 10000; ++i) {
        VitalSigns v;
        v.respiration_rate = pick(0, 60);
        v.spo2 = pick(0, 100);
        v.on_supplemental_oxygen = pick(0, 1);
        v.spo2_scale = static_cast<Spo2Scale>(pick(0, 1));
        v.systolic_bp = pick(0, 300);
        v.heart_rate = pick(0, 250);
        v.consciousness = static_cast<Consciousness>(pick(0, 4));
        v.temperature = TenthsCelsius{pick(200, 450)};
        expect_agrees(v);
    }
}

TEST_CASE("trend emits one alert per strict escalation") {
    auto low = baseline();
    low.timestamp = Instant{} + std::chrono::hours(1);
    auto medium = baseline();
    medium.timestamp = low.timestamp + std::chrono::hours(1);
    medium.respiration_rate = 22;  // 2
    medium.heart_rate = 115;       // 2
    medium.temperature = TenthsCelsius{385}; // 1
    auto high = medium;
    high.timestamp = medium.timestamp + std::chrono::hours(1);
    high.systolic_bp = 95;         // +2
    auto medium_again = medium;
    medium_again.timestamp = high.timestamp + std::chrono::hours(1);
    auto high_again = high;
    high_again.timestamp = medium_again.timestamp + std::chrono::hours(1);

    REQUIRE(compute_news(medium).band == RiskBand::Medium);
    REQUIRE(compute_news(high).band == RiskBand::High);

    std::vector<VitalSigns> series{low, medium, high, medium_again, high_again};
    const auto alerts = evaluate_trend("c1", series);
    REQUIRE(alerts.size() == 3);
    CHECK(alerts[0].previous_band == RiskBand::Low);
    CHECK(alerts[0].new_band == RiskBand::Medium);
    CHECK(alerts[1].new_band == RiskBand::High);
    CHECK(alerts[2].at == high_again.timestamp);
    CHECK(alerts[2].recommendation == recommendation_for(RiskBand::High));
    CHECK(alerts[0].case_id == "c1");
}

TEST_CASE("trend without escalation and on empty input") {
    std::vector<VitalSigns> flat{baseline()};
    CHECK(evaluate_trend("c", flat).empty());
    std::vector<VitalSigns> none;
    try {
        evaluate_trend("c", none);
        FAIL("expected EmptySeries");
    } catch (const Error& e) {
        CHECK(e.code() == "EmptySeries");
    }
}

TEST_CASE("alert json round trip") {
    auto v = baseline();
    v.respiration_rate = 26;
    MonitorAlert a{"c9", Instant{} + std::chrono::hours(5), RiskBand::Low, RiskBand::LowMedium, compute_news(v),
                   std::string(recommendation_for(RiskBand::LowMedium))};
    CHECK(alert_from_json(to_json(a)) == a);
    CHECK(band_from_string("LowMedium") == RiskBand::LowMedium);
    CHECK_THROWS_AS(band_from_string("Severe"), Error);
}
