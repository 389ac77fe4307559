#include "cascade/envelope.hpp"

#include "cascade/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

namespace {

double iterated_log_floor(int k) {
    // Smallest t with log_(i)(t) > 1 for all i <= k: exp iterated k times at 1.
    double t = 1.0;
    for (int i = 0; i < k; ++i) t = std::exp(t);
    return t;
}

double psi_iterated(int k, double t) {
    double prod = 1.0;
    double cur = t;
    for (int i = 0; i < k; ++i) {
        cur = std::log(cur);
        prod *= cur;
    }
    return 1.0 / prod;
}

double log_iterate(int k, double t) {
    double cur = t;
    for (int i = 0; i < k; ++i) cur = std::log(cur);
    return cur;
}

} // namespace

PsiSpec make_psi(int k) {
    if (k < 1) throw DomainError("make_psi: k must be at least 1");
    PsiSpec spec;
    spec.family = PsiFamily::IteratedLog;
    spec.k = k;
    spec.t0 = iterated_log_floor(k);
    return spec;
}

PsiSpec make_psi_perturbed(int k, double eps) {
    if (k < 1 || eps < 0.0) throw DomainError("make_psi_perturbed: need k >= 1, eps >= 0");
    PsiSpec spec;
    spec.family = PsiFamily::Perturbed;
    spec.k = k;
    spec.eps = eps;
    spec.t0 = iterated_log_floor(k);
    return spec;
}

PsiSpec make_psi_user(std::function<double(double)> psi, double t0) {
    PsiSpec spec;
    spec.family = PsiFamily::User;
    spec.user = std::move(psi);
    spec.t0 = t0;
    return spec;
}

double psi_value(const PsiSpec& spec, double t) {
    if (t < spec.t0) throw DomainError("psi_value: t below the domain floor");
    switch (spec.family) {
    case PsiFamily::IteratedLog:
        return psi_iterated(spec.k, t);
    case PsiFamily::Perturbed:
        return psi_iterated(spec.k, t) * std::pow(log_iterate(spec.k, t), -spec.eps);
    case PsiFamily::User:
        return spec.user(t);
    }
    throw DomainError("psi_value: unknown family");
}

IntegralClass integral_test(const PsiSpec& spec) {
    if (spec.family == PsiFamily::IteratedLog) return IntegralClass::Divergent;
    if (spec.family == PsiFamily::Perturbed)
        return spec.eps > 0.0 ? IntegralClass::Convergent : IntegralClass::Divergent;
    return integral_test_numeric(spec.user, spec.t0);
}

IntegralClass integral_test_numeric(const std::function<double(double)>& psi, double t0) {
    // Substituting t = e^s turns the tail integral of psi(t)/t into the
    // integral of psi(e^s) ds. Block sums over geometric s-windows are
    // compared: geometric decay certifies convergence, flat blocks certify
    // divergence, and slowly varying in-between data stays Inconclusive.
    // Doubles cap s near 700, which bounds how deep this can honestly see.
    const double s0 = std::max(std::log(std::max(t0, 2.0)), 1.0);
    std::vector<double> blocks;
    double lo = s0;
    while (lo * 2.0 <= 700.0) {
        const double hi = lo * 2.0;
        const int nodes = 512;
        const double h = (hi - lo) / nodes;
        double sum = 0.5 * (psi(std::exp(lo)) + psi(std::exp(hi)));
        for (int i = 1; i < nodes; ++i) sum += psi(std::exp(lo + i * h));
        blocks.push_back(sum * h);
        lo = hi;
    }
    if (blocks.size() < 3) return IntegralClass::Inconclusive;
    for (double b : blocks)
        if (!(b >= 0.0) || !std::isfinite(b)) return IntegralClass::Inconclusive;

    std::vector<double> ratios;
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        if (blocks[i - 1] <= 0.0) return blocks[i] <= 0.0 ? IntegralClass::Convergent
                                                          : IntegralClass::Inconclusive;
        ratios.push_back(blocks[i] / blocks[i - 1]);
    }
    const std::size_t tail = std::min<std::size_t>(4, ratios.size());
    double r = 0.0;
    for (std::size_t i = ratios.size() - tail; i < ratios.size(); ++i) r += ratios[i];
    r /= static_cast<double>(tail);

    if (r <= 0.90) return IntegralClass::Convergent;
    if (r >= 0.98) return IntegralClass::Divergent;
    // Power-law regime: fit block ~ j^{-beta}; sum converges iff beta > 1.
    std::vector<double> xs, ys;
    for (std::size_t j = 1; j < blocks.size(); ++j) {
        if (blocks[j] <= 0.0) break;
        xs.push_back(std::log(static_cast<double>(j + 1)));
        ys.push_back(std::log(blocks[j]));
    }
    if (xs.size() < 4) return IntegralClass::Inconclusive;
    const double beta = -num::fit_line(xs, ys).slope;
    if (beta > 1.15) return IntegralClass::Convergent;
    if (beta < 1.05) return IntegralClass::Divergent;
    return IntegralClass::Inconclusive;
}

PsiHypothesisCheck check_psi_hypotheses(const PsiSpec& spec) {
    PsiHypothesisCheck check;
    check.grid_only = true;
    const double hi = 1e12;
    const int n = 2000;
    const double lr = std::log(hi / (spec.t0 + 1.0)) / n;
    bool decreasing = true;
    double prev_psi = psi_value(spec, spec.t0 + 1.0);
    double prev_half = std::pow(spec.t0 + 1.0, 0.5 - spec.delta) * prev_psi;
    double increasing_from = hi;
    bool increasing_tail = true;
    for (int i = 1; i <= n; ++i) {
        const double t = (spec.t0 + 1.0) * std::exp(lr * i);
        const double p = psi_value(spec, t);
        if (p > prev_psi * (1.0 + 1e-12)) decreasing = false;
        const double half = std::pow(t, 0.5 - spec.delta) * p;
        if (half < prev_half) {
            increasing_from = t;
            increasing_tail = false;
        } else if (!increasing_tail) {
            increasing_tail = true;
        }
        prev_psi = p;
        prev_half = half;
    }
    check.decreasing = decreasing;
    check.halfpower_eventually_increasing = increasing_tail;
    check.increasing_from = increasing_from;
    return check;
}

LilSummary lil_statistic(const std::vector<std::vector<double>>& paths, double sigma2) {
    if (paths.empty()) throw DepthTooShallow("lil_statistic: no paths");
    const std::size_t depth = paths.front().size();
    if (depth < 10'000) throw DepthTooShallow("lil_statistic: paths must have depth >= 10^4");
    for (const auto& p : paths)
        if (p.size() != depth) throw DepthTooShallow("lil_statistic: ragged path depths");
    LilSummary out;
    out.per_path.reserve(paths.size());
    for (const auto& p : paths) {
        double mx = -1e300;
        for (std::size_t i = depth / 2; i < depth; ++i) {
            const double n = static_cast<double>(i + 1); // S_n at index n-1
            const double denom = std::sqrt(2.0 * sigma2 * n * std::log(std::log(n)));
            mx = std::max(mx, p[i] / denom);
        }
        out.per_path.push_back(mx);
    }
    out.median = num::median(out.per_path);
    out.q25 = num::quantile(out.per_path, 0.25);
    out.q75 = num::quantile(out.per_path, 0.75);
    return out;
}

EnvelopeReport envelope_exceedance(const std::vector<std::vector<double>>& mass_series,
                                   const std::function<double(double)>& phi, long n0) {
    if (mass_series.empty()) throw NonpositiveMass("envelope_exceedance: no series");
    const std::size_t depth = mass_series.front().size();
    for (const auto& series : mass_series) {
        if (series.size() != depth) throw NonpositiveMass("envelope_exceedance: ragged series");
        for (double m : series)
            if (!(m > 0.0)) throw NonpositiveMass("envelope_exceedance: nonpositive mass");
    }
    const long n_max = static_cast<long>(depth);
    if (n0 < 1 || n0 > n_max) throw DomainError("envelope_exceedance: n0 outside the series");

    EnvelopeReport report;
    report.n0 = n0;
    report.replicas = mass_series.size();
    for (long n = n0; n <= n_max; ++n) {
        report.ns.push_back(n);
        report.phi.push_back(phi(static_cast<double>(n)));
    }
    report.exceed_above.assign(report.ns.size(), 0);
    report.exceed_below.assign(report.ns.size(), 0);

    for (long lo = 1; 2 * lo <= n_max; lo *= 2)
        if (lo >= n0) report.windows.emplace_back(lo, 2 * lo);

    std::size_t aa_below = 0, aa_above = 0, io_above = 0, io_below = 0;
    std::vector<char> window_above(report.windows.size());
    std::vector<char> window_below(report.windows.size());
    for (const auto& series : mass_series) {
        bool any_above = false, any_below = false;
        std::fill(window_above.begin(), window_above.end(), 0);
        std::fill(window_below.begin(), window_below.end(), 0);
        for (std::size_t i = 0; i < report.ns.size(); ++i) {
            const long n = report.ns[i];
            const double mass = series[static_cast<std::size_t>(n - 1)];
            const double bound = report.phi[i];
            const bool above = mass > bound;
            const bool below = mass < bound;
            if (above) {
                ++report.exceed_above[i];
                any_above = true;
            }
            if (below) {
                ++report.exceed_below[i];
                any_below = true;
            }
            for (std::size_t w = 0; w < report.windows.size(); ++w) {
                if (n >= report.windows[w].first && n < report.windows[w].second) {
                    if (!below) window_above[w] = 1; // mass >= phi
                    if (!above) window_below[w] = 1; // mass <= phi
                }
            }
        }
        if (!any_above) ++aa_below; // mass <= phi everywhere beyond n0
        if (!any_below) ++aa_above; // mass >= phi everywhere beyond n0
        bool all_above = true, all_below = true;
        for (std::size_t w = 0; w < report.windows.size(); ++w) {
            all_above = all_above && window_above[w];
            all_below = all_below && window_below[w];
        }
        if (!report.windows.empty() && all_above) ++io_above;
        if (!report.windows.empty() && all_below) ++io_below;
    }
    const double total = static_cast<double>(mass_series.size());
    report.aa_below_fraction = static_cast<double>(aa_below) / total;
    report.aa_above_fraction = static_cast<double>(aa_above) / total;
    report.io_above_fraction = static_cast<double>(io_above) / total;
    report.io_below_fraction = static_cast<double>(io_below) / total;
    return report;
}

} // namespace cascade
