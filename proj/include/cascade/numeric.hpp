#pragma once

// Shared numerics: summary statistics, special functions, quadrature rules
// and small fitting helpers used across the toolkit.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cascade::num {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

// Streaming accumulator for mean / standard error.
class Accumulator {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double se() const;
    MeanSe summary() const { return {mean(), se(), n_}; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double median(std::vector<double> xs);
double quantile(std::vector<double> xs, double q);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double se_slope = 0.0;
    double se_intercept = 0.0;
};

LinearFit fit_line(std::span<const double> xs, std::span<const double> ys);

double normal_pdf(double x);
double normal_cdf(double x);

// Regularized incomplete gamma Q(a, x); chi-square survival function.
double gamma_q(double a, double x);
double chi2_sf(double x, double dof);

// Kolmogorov distribution survival Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test (asymptotic p-value; conservative under ties).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};

ChiSquareResult chi2_goodness_of_fit(std::span<const double> expected_probs,
                                     std::span<const std::uint64_t> observed, std::uint64_t total);

// Gauss-Hermite rule: integral of f(x) exp(-x^2) dx ~ sum w_i f(x_i).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gauss_hermite(int n);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_combine(std::uint64_t h, std::string_view bytes);

} // namespace cascade::num
