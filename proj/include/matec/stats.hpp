#pragma once

// One-sample Wilcoxon signed-rank test and Likert survey summaries.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace matec::stats {

enum class TestMethod { NormalApproxTieCorrected };

struct TestResult {
    int n_effective = 0;
    double w_plus = 0;
    double z = 0;
    double p_two_sided = 1;
    TestMethod method = TestMethod::NormalApproxTieCorrected;
};

// Zero differences are dropped, |d| gets mid-ranks, the variance carries the
// tie correction and z a 0.5 continuity correction toward the mean.
// Throws Error("EmptySample") or Error("AllZeroDifferences").
TestResult wilcoxon_one_sample(std::span<const double> samples, double mu);

struct QuestionSummary {
    double median = 0;
    std::map<int, int> distribution;  // rating -> count, all of 1..5 present
    TestResult test;
};

// Ratings must be integers 1..5. Throws EmptyQuestion, RatingOutOfRange.
std::map<std::string, QuestionSummary> summarize_survey(const std::map<std::string, std::vector<int>>& responses,
                                                        double mu = 3);

double median(std::vector<double> values);

// "question,rating" rows; an optional header row is skipped. Throws BadCsv.
std::map<std::string, std::vector<int>> parse_ratings_csv(std::string_view csv);

// Three significant figures, e.g. 0.00457 -> "0.00457".
std::string format_p(double p);

std::string render_summary_table(const std::map<std::string, QuestionSummary>& summary);

} // namespace matec::stats
