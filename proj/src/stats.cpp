#include "matec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "matec/error.hpp"
#include "matec/text.hpp"

namespace matec::stats {

TestResult wilcoxon_one_sample(std::span<const double> samples, double mu) {
    if (samples.empty()) throw Error("EmptySample", "no samples");
    std::vector<double> d;
    for (double x : samples) {
        if (x - mu != 0) d.push_back(x - mu);
    }
    if (d.empty()) throw Error("AllZeroDifferences", "every sample equals mu");

    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::fabs(d[a]) < std::fabs(d[b]); });

    const double n = static_cast<double>(d.size());
    double w_plus = 0;
    double tie_term = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && std::fabs(d[order[j]]) == std::fabs(d[order[i]])) ++j;
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (d[order[k]] > 0) w_plus += mid_rank;
        }
        i = j;
    }

    const double mean = n * (n + 1) / 4.0;
    const double variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
    TestResult r;
    r.n_effective = static_cast<int>(d.size());
    r.w_plus = w_plus;
    if (variance <= 0) {
        r.z = 0;
        r.p_two_sided = 1;
        return r;
    }
    const double diff = w_plus - mean;
    const double correction = diff > 0 ? 0.5 : diff < 0 ? -0.5 : 0.0;
    r.z = (diff - correction) / std::sqrt(variance);
    r.p_two_sided = std::min(1.0, std::erfc(std::fabs(r.z) / std::sqrt(2.0)));
    return r;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error("EmptySample", "median of nothing");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::map<std::string, QuestionSummary> summarize_survey(const std::map<std::string, std::vector<int>>& responses,
                                                        double mu) {
    std::map<std::string, QuestionSummary> out;
    for (const auto& [question, ratings] : responses) {
        if (ratings.empty()) throw Error("EmptyQuestion", "question '" + question + "' has no ratings");
        QuestionSummary s;
        for (int r = 1; r <= 5; ++r) s.distribution[r] = 0;
        std::vector<double> values;
        for (int r : ratings) {
            if (r < 1 || r > 5) {
                throw Error("RatingOutOfRange", "question '" + question + "': rating " + std::to_string(r) + " outside 1..5");
            }
            ++s.distribution[r];
            values.push_back(r);
        }
        s.median = median(values);
        try {
            s.test = wilcoxon_one_sample(values, mu);
        } catch (const Error& e) {
            if (e.code() != "AllZeroDifferences") throw;
            // Every rating equals mu: no evidence of deviation.
            s.test = TestResult{0, 0, 0, 1, TestMethod::NormalApproxTieCorrected};
        }
        out.emplace(question, std::move(s));
    }
    return out;
}

std::map<std::string, std::vector<int>> parse_ratings_csv(std::string_view csv) {
    std::map<std::string, std::vector<int>> out;
    int line_no = 0;
    for (auto raw : text::split_lines(csv)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.starts_with('#')) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string_view::npos) {
            throw Error("BadCsv", "line " + std::to_string(line_no) + ": expected 'question,rating'");
        }
        auto question = std::string(text::trim(line.substr(0, comma)));
        if (question.size() >= 2 && question.front() == '"' && question.back() == '"') {
            question = question.substr(1, question.size() - 2);
        }
        const auto value = text::parse_number(line.substr(comma + 1));
        if (!value) {
            if (line_no == 1) continue; // header
            throw Error("BadCsv", "line " + std::to_string(line_no) + ": rating is not a number");
        }
        if (*value != std::floor(*value)) {
            throw Error("RatingOutOfRange", "line " + std::to_string(line_no) + ": rating must be an integer");
        }
        out[question].push_back(static_cast<int>(*value));
    }
    return out;
}

std::string format_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", p);
    return buf;
}

std::string render_summary_table(const std::map<std::string, QuestionSummary>& summary) {
    std::ostringstream out;
    out << "question\tn\tmedian\t1\t2\t3\t4\t5\tW+\tz\tp\n";
    for (const auto& [q, s] : summary) {
        int n = 0;
        for (const auto& [rating, count] : s.distribution) n += count;
        out << q << '\t' << n << '\t' << text::format_number(s.median);
        for (const auto& [rating, count] : s.distribution) out << '\t' << count;
        char z[32];
        std::snprintf(z, sizeof z, "%.3f", s.test.z);
        out << '\t' << text::format_number(s.test.w_plus) << '\t' << z << '\t' << format_p(s.test.p_two_sided) << '\n';
    }
    return out.str();
}

} // namespace matec::stats
