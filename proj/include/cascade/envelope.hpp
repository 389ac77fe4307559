#pragma once

// The iterated-logarithm psi family, integral-test classification, the law of
// the iterated logarithm statistic, and finite-horizon envelope exceedance
// reports. "Almost always" and "infinitely often" are undecidable at finite
// horizon; the proxies here are "violation-free beyond n0" and "at least one
// hit in every dyadic window", reported as such.

#include "cascade/errors.hpp"

#include <functional>
#include <vector>

namespace cascade {

enum class PsiFamily { IteratedLog, Perturbed, User };
enum class IntegralClass { Convergent, Divergent, Inconclusive };

struct PsiSpec {
    PsiFamily family = PsiFamily::IteratedLog;
    int k = 1;
    double eps = 0.0;
    double delta = 0.45; // regularity exponent for the t^{1/2-delta} hypothesis
    std::function<double(double)> user;
    double t0 = 0.0; // smallest t with every iterated log above 1
};

PsiSpec make_psi(int k);
PsiSpec make_psi_perturbed(int k, double eps);
PsiSpec make_psi_user(std::function<double(double)> psi, double t0);

double psi_value(const PsiSpec& spec, double t);

IntegralClass integral_test(const PsiSpec& spec);
// Numeric classifier on [t0, ~1e300]; honest Inconclusive escape hatch.
IntegralClass integral_test_numeric(const std::function<double(double)>& psi, double t0);

struct PsiHypothesisCheck {
    bool decreasing = false;
    bool halfpower_eventually_increasing = false;
    double increasing_from = 0.0;
    bool grid_only = true;
};

PsiHypothesisCheck check_psi_hypotheses(const PsiSpec& spec);

struct LilSummary {
    std::vector<double> per_path; // max over [N/2, N] of S_n / sqrt(2 sigma^2 n loglog n)
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

LilSummary lil_statistic(const std::vector<std::vector<double>>& paths, double sigma2);

struct EnvelopeReport {
    long n0 = 0;
    std::vector<long> ns;             // evaluated indices (from the series)
    std::vector<double> phi;          // envelope values at ns
    std::vector<long> exceed_above;   // replicas with mass > phi at n
    std::vector<long> exceed_below;   // replicas with mass < phi at n
    std::size_t replicas = 0;

    // a.a. proxies: fraction of replicas with zero violations beyond n0.
    double aa_below_fraction = 0.0; // of {mass <= phi}
    double aa_above_fraction = 0.0; // of {mass >= phi}
    // i.o. proxies: fraction of replicas with >= 1 hit in every dyadic window.
    double io_above_fraction = 0.0; // hits of {mass >= phi}
    double io_below_fraction = 0.0; // hits of {mass <= phi}
    std::vector<std::pair<long, long>> windows; // [lo, hi) dyadic windows used
};

// mass_series[r][i] is the mass of replica r at index n = i + 1; series must
// be strictly positive (NonpositiveMass otherwise).
EnvelopeReport envelope_exceedance(const std::vector<std::vector<double>>& mass_series,
                                   const std::function<double(double)>& phi, long n0);

} // namespace cascade
