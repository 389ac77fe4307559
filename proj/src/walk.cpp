#include "cascade/walk.hpp"

#include "cascade/errors.hpp"
#include "cascade/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cascade {

namespace {

constexpr double kNormalTailSds = 8.0;
constexpr double kKernelTol = 1e-8;

double fitted_c3(const RenewalTable& table) {
    // max over grid pairs of (R(v) - R(u)) / (1 + v - u); step tables also
    // admit a unit jump over a vanishing gap.
    double c3 = table.step_semantics ? 1.0 : 0.0;
    const std::size_t k = table.values.size();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double dx = static_cast<double>(j - i) * table.grid_step;
            const double r = (table.values[j] - table.values[i]) / (1.0 + dx);
            if (r > c3) c3 = r;
        }
    }
    return c3;
}

double tail_slope_fit(const RenewalTable& table) {
    const std::size_t k = table.values.size();
    if (k < 8) return table.slope;
    std::vector<double> xs, ys;
    for (std::size_t i = k / 2; i < k; ++i) {
        xs.push_back(static_cast<double>(i) * table.grid_step);
        ys.push_back(table.values[i]);
    }
    return num::fit_line(xs, ys).slope;
}

} // namespace

double WalkLaw::sample(rng::Stream& stream) const {
    if (kind == WalkKind::Gaussian) return stream.normal(0.0, sd());
    const double u = stream.next_double();
    double acc = 0.0;
    for (const WalkAtom& a : atoms) {
        acc += a.prob;
        if (u < acc) return a.value;
    }
    return atoms.back().value;
}

double WalkLaw::sd() const { return std::sqrt(sigma2); }

WalkLaw associated_walk(const OffspringLaw& law) {
    if (!law.boundary_normalized)
        throw NotBoundaryNormalized("associated_walk requires a boundary-normalized law");
    WalkLaw walk;
    walk.provenance = law.fingerprint();
    if (law.kind == OffspringKind::GaussianBinary) {
        walk.kind = WalkKind::Gaussian;
        walk.sigma2 = law.gauss_variance;
        return walk;
    }
    walk.kind = WalkKind::Atoms;
    const double en = law.mean_count();
    double total = 0.0;
    for (const Atom& a : law.atoms) {
        const double w = en * a.prob * std::exp(-a.value);
        walk.atoms.push_back({a.value, w});
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-6)
        throw NotBoundaryNormalized("associated_walk: tilted atom mass is not 1");
    double mean = 0.0, var = 0.0;
    for (WalkAtom& a : walk.atoms) {
        a.prob /= total;
        mean += a.prob * a.value;
    }
    if (std::fabs(mean) > 1e-9) throw NotBoundaryNormalized("associated_walk: nonzero mean");
    for (const WalkAtom& a : walk.atoms) var += a.prob * a.value * a.value;
    walk.sigma2 = var;
    walk.lattice = law.lattice;
    walk.span = law.lattice_span;
    return walk;
}

LadderSummary ladder_heights(const WalkLaw& walk, long reps, rng::Stream& stream,
                             std::uint64_t step_cap) {
    if (reps <= 0) throw ConfigInvalid("ladder_heights: reps must be positive");
    LadderSummary out;
    num::Accumulator acc;
    for (long rep = 0; rep < reps; ++rep) {
        double s = 0.0;
        bool descended = false;
        for (std::uint64_t step = 0; step < step_cap; ++step) {
            s += walk.sample(stream);
            if (s < 0.0) {
                descended = true;
                break;
            }
        }
        if (!descended) {
            ++out.overflows;
            continue;
        }
        acc.add(-s);
        if (out.sample.size() < 64) out.sample.push_back(-s);
    }
    out.reps = static_cast<std::uint64_t>(reps);
    out.e_abs_h1 = acc.mean();
    out.se = acc.se();
    return out;
}

double RenewalTable::operator()(double u) const {
    if (u < 0.0) return 0.0;
    if (values.empty()) throw RenewalDomainExceeded("empty renewal table");
    const double k = u / grid_step;
    if (step_semantics) {
        // Staircase: R is constant between lattice points, right-continuous.
        const auto idx = static_cast<long long>(std::floor(k + 1e-9));
        const auto last = static_cast<long long>(values.size()) - 1;
        if (idx <= last) return values[static_cast<std::size_t>(idx)];
        return values.back() + static_cast<double>(idx - last) * slope * grid_step;
    }
    const auto last = static_cast<long long>(values.size()) - 1;
    const auto idx = static_cast<long long>(std::floor(k));
    if (idx >= last) return values.back() + (u - u_max) * slope;
    const double frac = k - static_cast<double>(idx);
    const std::size_t i = static_cast<std::size_t>(idx);
    return values[i] + frac * (values[i + 1] - values[i]);
}

RenewalTable build_renewal(const WalkLaw& walk, double u_max, double grid, RenewalMethod method,
                           long reps, rng::Stream* stream, std::uint64_t step_cap) {
    if (u_max <= 0.0) throw ConfigInvalid("build_renewal: u_max must be positive");
    RenewalTable table;
    table.method = method;
    table.walk_fingerprint = walk.provenance;

    if (method == RenewalMethod::ExactLattice) {
        if (!walk.lattice) throw MethodMismatch("exact-lattice renewal needs a lattice walk");
        double min_atom = 0.0;
        for (const WalkAtom& a : walk.atoms) min_atom = std::min(min_atom, a.value);
        if (min_atom < -walk.span - 1e-12)
            throw MethodMismatch(
                "exact-lattice renewal implemented for downward skip-free walks only");
        // Skip-free descent: every strictly descending ladder height is
        // exactly -span, so R(k span) = k + 1.
        table.grid_step = walk.span;
        const auto k_max = static_cast<std::size_t>(std::floor(u_max / walk.span + 1e-9));
        table.values.resize(k_max + 1);
        for (std::size_t k = 0; k <= k_max; ++k) table.values[k] = static_cast<double>(k + 1);
        table.u_max = static_cast<double>(k_max) * walk.span;
        table.e_abs_h1 = walk.span;
        table.slope = 1.0 / walk.span;
        table.step_semantics = true;
        table.c3 = fitted_c3(table);
        table.c0_tail_fit = tail_slope_fit(table);
        return table;
    }

    if (reps <= 0 || stream == nullptr)
        throw ConfigInvalid("monte-carlo renewal needs reps > 0 and a random stream");
    const double h = grid > 0.0 ? grid : walk.sd() / 50.0;
    const auto k_max = static_cast<std::size_t>(std::ceil(u_max / h));
    table.grid_step = h;
    table.u_max = static_cast<double>(k_max) * h;
    table.reps = static_cast<std::uint64_t>(reps);

    const std::size_t n_batches = std::min<std::size_t>(128, static_cast<std::size_t>(reps));
    std::vector<std::vector<double>> batch_hist(n_batches,
                                                std::vector<double>(k_max + 1, 0.0));
    std::vector<std::uint64_t> batch_reps(n_batches, 0);
    for (long rep = 0; rep < reps; ++rep) {
        const std::size_t b = static_cast<std::size_t>(rep) * n_batches /
                              static_cast<std::size_t>(reps);
        ++batch_reps[b];
        batch_hist[b][0] += 1.0; // the position S_0 = 0 itself
        double s = 0.0;
        bool closed = false;
        for (std::uint64_t step = 0; step < step_cap; ++step) {
            s += walk.sample(stream);
            if (s >= 0.0) {
                closed = true;
                break;
            }
            const double depth = -s;
            if (depth <= table.u_max) {
                const auto idx = static_cast<std::size_t>(std::ceil(depth / h - 1e-9));
                batch_hist[b][std::min(idx, k_max)] += 1.0;
            }
        }
        if (!closed) ++table.overflow_count;
    }

    table.values.assign(k_max + 1, 0.0);
    table.se.assign(k_max + 1, 0.0);
    std::vector<double> batch_means(n_batches);
    for (std::size_t k = 0; k <= k_max; ++k) {
        double total = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            if (k > 0) batch_hist[b][k] += batch_hist[b][k - 1]; // cumulate in place
            batch_means[b] = batch_reps[b] > 0
                                 ? batch_hist[b][k] / static_cast<double>(batch_reps[b])
                                 : 0.0;
            total += batch_hist[b][k];
        }
        table.values[k] = total / static_cast<double>(reps);
        const num::MeanSe ms = num::mean_se(batch_means);
        table.se[k] = ms.se;
    }

    // Extension slope from the ladder-height mean, estimated on the same walk.
    const LadderSummary ladder =
        ladder_heights(walk, std::min<long>(reps, 200'000), *stream, step_cap);
    table.e_abs_h1 = ladder.e_abs_h1;
    table.se_e_abs_h1 = ladder.se;
    table.overflow_count += ladder.overflows;
    table.slope = ladder.e_abs_h1 > 0.0 ? 1.0 / ladder.e_abs_h1 : 0.0;
    table.c3 = fitted_c3(table);
    table.c0_tail_fit = tail_slope_fit(table);
    return table;
}

ResidualEstimate renewal_identity_residual(const RenewalTable& renewal, const WalkLaw& walk,
                                           double u, long reps, rng::Stream* stream) {
    if (u < 0.0) throw DomainError("renewal_identity_residual: u must be nonnegative");
    if (walk.kind == WalkKind::Atoms) {
        double e = 0.0;
        for (const WalkAtom& a : walk.atoms)
            if (a.value >= -u) e += a.prob * renewal(a.value + u);
        return {renewal(u) - e, 0.0};
    }
    if (reps <= 0 || stream == nullptr)
        throw ConfigInvalid("renewal_identity_residual: continuous walks need reps and a stream");
    num::Accumulator acc;
    num::Accumulator table_se_acc;
    for (long rep = 0; rep < reps; ++rep) {
        const double s = walk.sample(*stream);
        if (s >= -u) {
            acc.add(renewal(s + u));
            if (!renewal.se.empty()) {
                const double pos = (s + u) / renewal.grid_step;
                const std::size_t idx =
                    std::min(renewal.se.size() - 1,
                             static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
                table_se_acc.add(renewal.se[idx]);
            }
        } else {
            acc.add(0.0);
        }
    }
    const double se_u =
        renewal.se.empty()
            ? 0.0
            : renewal.se[std::min(renewal.se.size() - 1,
                                  static_cast<std::size_t>(u / renewal.grid_step))];
    const double se_pts = table_se_acc.count() > 0 ? table_se_acc.mean() : 0.0;
    // Table errors at nearby u are strongly correlated; treating them as an
    // additive systematic term keeps the combined band honest.
    const double se = std::sqrt(acc.se() * acc.se() + se_u * se_u + se_pts * se_pts);
    return {renewal(u) - acc.mean(), se};
}

namespace {

thread_local std::vector<double> g_kernel_density;
thread_local std::vector<double> g_kernel_cdf;

double simpson_mass(const std::vector<double>& f, std::size_t stride, double h) {
    // Simpson over points 0, stride, 2*stride, ...; (f.size()-1)/stride even.
    const std::size_t n = (f.size() - 1) / stride;
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += f[i * stride];
    for (std::size_t i = 2; i < n; i += 2) even += f[i * stride];
    return (f.front() + f.back() + 4.0 * odd + 2.0 * even) * h / 3.0;
}

double sample_kernel_gaussian(double state, const WalkLaw& walk, const RenewalTable& renewal,
                              double alpha, rng::Stream& stream) {
    const double s = walk.sd();
    const double lo = std::max(-alpha, state - kNormalTailSds * s);
    const double hi = state + kNormalTailSds * s;
    const double inv2s2 = 1.0 / (2.0 * s * s);

    std::size_t n = 2048;
    double h = 0.0;
    for (;;) {
        h = (hi - lo) / static_cast<double>(n);
        auto& f = g_kernel_density;
        f.resize(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double y = lo + static_cast<double>(i) * h;
            const double dy = y - state;
            f[i] = renewal(y + alpha) * std::exp(-dy * dy * inv2s2);
        }
        const double full = simpson_mass(f, 1, h);
        const double half = simpson_mass(f, 2, 2.0 * h);
        if (std::fabs(full - half) <= kKernelTol * std::fabs(full) || n >= 32768) break;
        n *= 2;
    }

    const auto& f = g_kernel_density;
    auto& cdf = g_kernel_cdf;
    cdf.resize(n + 1);
    cdf[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (f[i - 1] + f[i]) * h;
    const double total = cdf[n];
    if (!(total > 0.0)) throw DomainError("conditioned_step: kernel mass vanished");

    const double target = stream.next_double() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    std::size_t cell = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::distance(cdf.begin(), it) - 1));
    if (cell >= n) cell = n - 1;
    const double rem = target - cdf[cell];
    const double f0 = f[cell];
    const double f1 = f[cell + 1];
    const double a = 0.5 * (f1 - f0) / h;
    double t;
    if (std::fabs(a) < 1e-300) {
        t = f0 > 0.0 ? rem / f0 : 0.5 * h;
    } else {
        const double disc = f0 * f0 + 4.0 * a * rem;
        t = (std::sqrt(std::max(0.0, disc)) - f0) / (2.0 * a);
    }
    t = std::clamp(t, 0.0, h);
    return lo + static_cast<double>(cell) * h + t;
}

} // namespace

void conditioned_kernel_atoms(double state, const WalkLaw& walk, const RenewalTable& renewal,
                              double alpha, std::vector<WalkAtom>& out) {
    if (walk.kind != WalkKind::Atoms)
        throw MethodMismatch("conditioned_kernel_atoms: walk has no atom kernel");
    if (state < -alpha) throw StateBelowBarrier("conditioned_kernel_atoms: state below -alpha");
    out.clear();
    double total = 0.0;
    for (const WalkAtom& a : walk.atoms) {
        const double y = state + a.value;
        const double w = y >= -alpha ? a.prob * renewal(y + alpha) : 0.0;
        out.push_back({y, w});
        total += w;
    }
    if (!(total > 0.0)) throw DomainError("conditioned_kernel_atoms: kernel mass vanished");
    for (WalkAtom& a : out) a.prob /= total;
}

double conditioned_step(double state, const WalkLaw& walk, const RenewalTable& renewal,
                        double alpha, rng::Stream& stream) {
    if (state < -alpha) throw StateBelowBarrier("conditioned_step: state below -alpha");
    if (walk.kind == WalkKind::Atoms) {
        thread_local std::vector<WalkAtom> kernel;
        conditioned_kernel_atoms(state, walk, renewal, alpha, kernel);
        double u = stream.next_double();
        for (const WalkAtom& a : kernel) {
            u -= a.prob;
            if (u < 0.0) return a.value;
        }
        return kernel.back().value;
    }
    return sample_kernel_gaussian(state, walk, renewal, alpha, stream);
}

ConditionedPath conditioned_path(const WalkLaw& walk, const RenewalTable& renewal, double alpha,
                                 long n, rng::Stream& stream, double start) {
    if (n < 1) throw ConfigInvalid("conditioned_path: n must be at least 1");
    if (start < -alpha) throw StateBelowBarrier("conditioned_path: start below -alpha");
    ConditionedPath path;
    path.alpha = alpha;
    path.start = start;
    path.law_fingerprint = walk.provenance;
    path.values.resize(static_cast<std::size_t>(n));
    double s = start;
    for (long k = 0; k < n; ++k) {
        s = conditioned_step(s, walk, renewal, alpha, stream);
        path.values[static_cast<std::size_t>(k)] = s;
    }
    return path;
}

double stay_above_probability(const RenewalTable& renewal, double alpha, double y, double x) {
    if (!(y >= x) || !(x >= -alpha)) throw DomainError("stay_above_probability: need y >= x >= -alpha");
    return renewal(y - x) / renewal(alpha + y);
}

std::vector<TailEstimate> min_tail_probability(const WalkLaw& walk, const RenewalTable& renewal,
                                               double alpha, double x,
                                               const std::vector<long>& ns, long horizon,
                                               long reps, rng::Stream& stream) {
    if (ns.empty()) return {};
    for (long n : ns)
        if (n < 1 || n > horizon) throw ConfigInvalid("min_tail_probability: need 1 <= n <= horizon");
    if (x < -alpha) return std::vector<TailEstimate>(ns.size(), TailEstimate{0.0, 0.0});

    std::vector<num::Accumulator> acc(ns.size());
    std::vector<double> pos(static_cast<std::size_t>(horizon) + 1);
    std::vector<double> sufmin(static_cast<std::size_t>(horizon) + 1);
    for (long rep = 0; rep < reps; ++rep) {
        pos[0] = 0.0;
        double s = 0.0;
        for (long k = 1; k <= horizon; ++k) {
            s = conditioned_step(s, walk, renewal, alpha, stream);
            pos[static_cast<std::size_t>(k)] = s;
        }
        sufmin[static_cast<std::size_t>(horizon)] = pos[static_cast<std::size_t>(horizon)];
        for (long k = horizon - 1; k >= 0; --k)
            sufmin[static_cast<std::size_t>(k)] =
                std::min(pos[static_cast<std::size_t>(k)], sufmin[static_cast<std::size_t>(k) + 1]);
        const double end_state = pos[static_cast<std::size_t>(horizon)];
        const double closure =
            end_state >= x ? 1.0 - renewal(end_state - x) / renewal(alpha + end_state) : 1.0;
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const bool hit = sufmin[static_cast<std::size_t>(ns[i])] <= x;
            acc[i].add(hit ? 1.0 : closure);
        }
    }
    std::vector<TailEstimate> out(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) out[i] = {acc[i].mean(), acc[i].se()};
    return out;
}

} // namespace cascade
