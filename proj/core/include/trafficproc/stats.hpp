#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trafficproc::stats {

struct TTestResult {
    int64_t sample_n = 0;
    double sample_mean = 0.0;
    double sample_sd = 0.0;
    double mu0 = 0.0;
    double t_score = 0.0;
    int64_t df = 0;
    double p_value = 1.0;
    double alpha = 0.01;
    bool reject = false;
    bool degenerate = false;  // sd == 0 branch
};

// Arithmetic mean and sample standard deviation (n-1 denominator).
// Throws std::invalid_argument for n < 2.
std::pair<double, double> mean_sd(std::span<const double> sample);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T_df| >= |t|) of Student's t.
double t_sf_two_sided(double t, int64_t df);

TTestResult t_test_one_sample(std::span<const double> sample, double mu0, double alpha);

// Pairs a[i] with b[i] and tests the mean difference against zero.
TTestResult t_test_paired(std::span<const double> a, std::span<const double> b, double alpha);

// One report row per link, mirroring the headline results table.
struct TTestRow {
    std::string link_id;
    double dataset_mean = 0.0;
    TTestResult test;
};

std::string ttest_report_header();
std::string ttest_report_row(const TTestRow& row);

}  // namespace trafficproc::stats
