#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "matec/error.hpp"
#include "matec/stats.hpp"

using namespace matec;
using namespace matec::stats;

namespace {

std::vector<double> repeat(std::initializer_list<std::pair<double, int>> groups) {
    std::vector<double> out;
    for (const auto& [value, count] : groups) out.insert(out.end(), static_cast<size_t>(count), value);
    return out;
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

// Quadratic re-derivation: the mid-rank of |d_i| is the count of strictly
// smaller magnitudes plus the average position within its tie group.
struct Oracle {
    double w_plus;
    double z;
    double p;
};

Oracle oracle(const std::vector<double>& xs, double mu) {
    std::vector<double> d;
    for (double x : xs) {
        if (x != mu) d.push_back(x - mu);
    }
    const double n = static_cast<double>(d.size());
    double w = 0;
    for (double di : d) {
        double below = 0, equal = 0;
        for (double dj : d) {
            if (std::fabs(dj) < std::fabs(di)) below += 1;
            if (std::fabs(dj) == std::fabs(di)) equal += 1;
        }
        if (di > 0) w += below + (equal + 1) / 2;
    }
    double ties = 0;
    std::vector<bool> seen(d.size(), false);
    for (size_t i = 0; i < d.size(); ++i) {
        if (seen[i]) continue;
        double t = 0;
        for (size_t j = i; j < d.size(); ++j) {
            if (std::fabs(d[j]) == std::fabs(d[i])) {
                seen[j] = true;
                t += 1;
            }
        }
        ties += t * t * t - t;
    }
    const double mean = n * (n + 1) / 4;
    const double var = n * (n + 1) * (2 * n + 1) / 24 - ties / 48;
    if (var <= 0) return {w, 0, 1};
    double dev = std::fabs(w - mean) - 0.5;
    if (dev < 0) dev = 0;
    const double z = (w >= mean ? dev : -dev) / std::sqrt(var);
    return {w, z, std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)))};
}

} // namespace

TEST_CASE("accuracy ratings") {
    const auto xs = repeat({{4, 6}, {5, 4}});
    const auto r = wilcoxon_one_sample(xs, 3);
    CHECK(r.n_effective == 10);
    CHECK(r.w_plus == 55);
    // mean 27.5, variance 96.25 - 270/48 = 90.625, z = 27 / sqrt(90.625)
    CHECK(r.z == doctest::Approx(27 / std::sqrt(90.625)).epsilon(1e-12));
    CHECK(r.z == doctest::Approx(2.836).epsilon(1e-3));
    CHECK(r.p_two_sided >= 0.0040);
    CHECK(r.p_two_sided <= 0.0052);
    CHECK(format_p(r.p_two_sided) == "0.00457");
    CHECK(r.method == TestMethod::NormalApproxTieCorrected);
}

TEST_CASE("reconstructed usefulness ratings") {
    const auto r = wilcoxon_one_sample(repeat({{5, 4}, {4, 4}, {3, 2}}), 3);
    CHECK(r.n_effective == 8);
    CHECK(r.w_plus == 36);
    // mean 18, variance 51 - 120/48 = 48.5
    CHECK(r.z == doctest::Approx(17.5 / std::sqrt(48.5)).epsilon(1e-12));
    CHECK(r.p_two_sided >= 0.0095);
    CHECK(r.p_two_sided <= 0.0149);
}

TEST_CASE("symmetric and degenerate samples") {
    const std::vector<double> sym{2, 4};
    const auto r = wilcoxon_one_sample(sym, 3);
    CHECK(r.w_plus == 1.5);
    CHECK(r.p_two_sided == doctest::Approx(1.0).epsilon(0.05));
    const std::vector<double> flat{3, 3, 3};
    CHECK(code_of([&] { wilcoxon_one_sample(flat, 3); }) == "AllZeroDifferences");
    const std::vector<double> none;
    CHECK(code_of([&] { wilcoxon_one_sample(none, 3); }) == "EmptySample");
}

TEST_CASE("random samples agree with the quadratic oracle") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 2000; ++iter) {
        const int n = std::uniform_int_distribution<int>(1, 40)(rng);
        std::vector<double> xs;
        for (int i = 0; i < n; ++i) xs.push_back(std::uniform_int_distribution<int>(1, 5)(rng));
        bool any = false;
        for (double x : xs) any = any || x != 3;
        if (!any) continue;
        const auto got = wilcoxon_one_sample(xs, 3);
        const auto want = oracle(xs, 3);
        CHECK(got.w_plus == doctest::Approx(want.w_plus));
        CHECK(got.z == doctest::Approx(want.z));
        CHECK(got.p_two_sided == doctest::Approx(want.p));
        CHECK(got.p_two_sided >= 0);
        CHECK(got.p_two_sided <= 1);
        CHECK(got.w_plus >= 0);
        CHECK(got.w_plus <= got.n_effective * (got.n_effective + 1) / 2.0);
    }
}

TEST_CASE("sign symmetry, zero invariance, all-positive maximum") {
    std::mt19937_64 rng(3);
    for (int iter = 0; iter < 500; ++iter) {
        const int n = std::uniform_int_distribution<int>(2, 30)(rng);
        std::vector<double> xs;
        for (int i = 0; i < n; ++i) xs.push_back(std::uniform_int_distribution<int>(1, 5)(rng));
        xs[0] = 5;
        std::vector<double> mirrored;
        for (double x : xs) mirrored.push_back(2 * 3 - x);
        const auto a = wilcoxon_one_sample(xs, 3);
        CHECK(wilcoxon_one_sample(mirrored, 3).p_two_sided == doctest::Approx(a.p_two_sided));

        auto padded = xs;
        padded.push_back(3);
        const auto b = wilcoxon_one_sample(padded, 3);
        CHECK(b.w_plus == a.w_plus);
        CHECK(b.p_two_sided == a.p_two_sided);

        std::vector<double> positive;
        for (int i = 0; i < n; ++i) positive.push_back(3.5 + i % 3);
        CHECK(wilcoxon_one_sample(positive, 3).w_plus == n * (n + 1) / 2.0);
    }
}

TEST_CASE("survey summary") {
    std::map<std::string, std::vector<int>> responses{
        {"accuracy", {4, 4, 4, 4, 4, 4, 5, 5, 5, 5}},
        {"comparison", {5, 5, 5, 4, 4, 4}},
    };
    const auto s = summarize_survey(responses);
    CHECK(s.at("accuracy").median == 4);
    CHECK(s.at("comparison").median == 4.5);
    CHECK(s.at("accuracy").distribution == std::map<int, int>{{1, 0}, {2, 0}, {3, 0}, {4, 6}, {5, 4}});
    CHECK(s.at("accuracy").test.w_plus == 55);

    responses["flat"] = {3, 3};
    CHECK(summarize_survey(responses).at("flat").test.p_two_sided == 1);
    CHECK(code_of([] { summarize_survey({{"q", {4, 7}}}); }) == "RatingOutOfRange");
    CHECK(code_of([] { summarize_survey({{"q", {}}}); }) == "EmptyQuestion");
}

TEST_CASE("median") {
    CHECK(median({3}) == 3);
    CHECK(median({1, 9, 5}) == 5);
    CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("ratings csv") {
    const auto r = parse_ratings_csv("question,rating\naccuracy,4\naccuracy,5\n\"ease, of use\",3\n");
    CHECK(r.at("accuracy") == std::vector<int>{4, 5});
    CHECK(r.at("ease, of use") == std::vector<int>{3});
    CHECK(parse_ratings_csv("q,2\n").at("q") == std::vector<int>{2});
    CHECK(code_of([] { parse_ratings_csv("accuracy;4\n"); }) == "BadCsv");
    CHECK(code_of([] { parse_ratings_csv("accuracy,4\naccuracy,four\n"); }) == "BadCsv");
}

TEST_CASE("p formatting and table") {
    CHECK(format_p(0.0045651) == "0.00457");
    CHECK(format_p(0.011966) == "0.012");
    CHECK(format_p(1) == "1");
    const auto table = render_summary_table(summarize_survey({{"accuracy", {4, 4, 4, 4, 4, 4, 5, 5, 5, 5}}}));
    CHECK(table.find("accuracy") != std::string::npos);
    CHECK(table.find("0.00457") != std::string::npos);
}
