#include "cascade/numeric.hpp"

#include "cascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace cascade::num {

MeanSe mean_se(std::span<const double> xs) {
    Accumulator acc;
    for (double x : xs) acc.add(x);
    return acc.summary();
}

double Accumulator::se() const {
    if (n_ < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(n_));
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) return 0.0;
    q = std::clamp(q, 0.0, 1.0);
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(lo), xs.end());
    const double vlo = xs[lo];
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(hi), xs.end());
    const double vhi = xs[hi];
    const double frac = pos - static_cast<double>(lo);
    return vlo + frac * (vhi - vlo);
}

LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = std::min(xs.size(), ys.size());
    LinearFit fit;
    if (n < 2) return fit;
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0) return fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
            rss += r * r;
        }
        const double s2 = rss / static_cast<double>(n - 2);
        fit.se_slope = std::sqrt(s2 / sxx);
        fit.se_intercept = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    }
    return fit;
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / 2.5066282746310005024157652848110;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488016887242097); }

namespace {

// Lanczos-free log-gamma via std::lgamma, series and continued fraction for
// the regularized incomplete gamma functions.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0) return {0.0, 1.0};
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const double x = std::min(a[i], b[j]);
        while (i < n && a[i] <= x) ++i;
        while (j < m && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / static_cast<double>(n) -
                                  static_cast<double>(j) / static_cast<double>(m)));
    }
    const double ne = static_cast<double>(n) * static_cast<double>(m) /
                      (static_cast<double>(n) + static_cast<double>(m));
    const double sqne = std::sqrt(ne);
    // Stephens' effective-size correction for the asymptotic distribution.
    const double lambda = (sqne + 0.12 + 0.11 / sqne) * d;
    return {d, kolmogorov_sf(lambda)};
}

ChiSquareResult chi2_goodness_of_fit(std::span<const double> expected_probs,
                                     std::span<const std::uint64_t> observed,
                                     std::uint64_t total) {
    if (expected_probs.size() != observed.size() || expected_probs.empty())
        throw DomainError("chi2_goodness_of_fit: size mismatch");
    ChiSquareResult res;
    for (std::size_t i = 0; i < expected_probs.size(); ++i) {
        const double e = expected_probs[i] * static_cast<double>(total);
        if (e <= 0.0) {
            if (observed[i] > 0) return {1e300, 0.0, expected_probs.size() - 1};
            continue;
        }
        const double diff = static_cast<double>(observed[i]) - e;
        res.statistic += diff * diff / e;
        ++res.dof;
    }
    if (res.dof > 1) --res.dof;
    res.p_value = res.dof > 0 ? chi2_sf(res.statistic, static_cast<double>(res.dof)) : 1.0;
    return res;
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw DomainError("gauss_hermite: n must be positive");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        // Stroud-style initial guesses for the largest roots, then spacing.
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i) - 2];
        }
        // Newton iteration on the orthonormal Hermite recurrence.
        double p1 = 0.0, p2 = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            p1 = 0.7511255444649425; // pi^{-1/4}
            p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            const double pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-15) break;
        }
        const double pp = std::sqrt(2.0 * n) * p2;
        rule.nodes[static_cast<std::size_t>(i)] = z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = rule.weights[static_cast<std::size_t>(i)];
    }
    return rule;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    return fnv1a64_combine(1469598103934665603ull, bytes);
}

std::uint64_t fnv1a64_combine(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace cascade::num
