#include "cascade/spine.hpp"

#include "cascade/errors.hpp"
#include "cascade/lattice_histogram.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

namespace {

int sample_size_biased_count(const OffspringLaw& law, rng::Stream& stream) {
    const double mean = law.mean_count();
    double u = stream.next_double() * mean;
    for (std::size_t k = 1; k < law.count_probs.size(); ++k) {
        u -= static_cast<double>(k) * law.count_probs[k];
        if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(law.count_probs.size()) - 1;
}

} // namespace

SpineStep spine_step(const OffspringLaw& law, const WalkLaw& walk, const RenewalTable& renewal,
                     double alpha, double v, rng::Stream& stream, SpineVariant variant) {
    if (!law.iid_children)
        throw RejectionBudgetExceeded("spine_step: only i.i.d.-children laws are supported");
    if (variant == SpineVariant::Exact && v < -alpha)
        throw BarrierViolated("spine_step: spine position below -alpha");
    SpineStep step;
    const int count = sample_size_biased_count(law, stream);
    step.children.resize(static_cast<std::size_t>(count));
    step.spine_index = static_cast<std::size_t>(stream.next_double() * count);
    if (step.spine_index >= step.children.size()) step.spine_index = step.children.size() - 1;
    for (std::size_t c = 0; c < step.children.size(); ++c) {
        if (c == step.spine_index) {
            if (variant == SpineVariant::MutatedUnbiased) {
                step.children[c] = law.sample_displacement(stream);
            } else {
                // The tilted child density p(du) e^{-u} R(alpha+v+u) coincides
                // with the h-transform increment from state v.
                step.children[c] = conditioned_step(v, walk, renewal, alpha, stream) - v;
            }
        } else {
            step.children[c] = law.sample_displacement(stream);
        }
    }
    return step;
}

double side_subtree_derivative(const OffspringLaw& law, int m, std::uint64_t cap,
                               rng::Stream& stream, bool* cap_hit) {
    if (cap_hit != nullptr) *cap_hit = false;
    if (m <= 0) return 0.0;
    if (lattice_histogram_supported(law)) {
        const LatticeHistogram hist = grow_lattice_histogram(law, m, stream);
        return hist.derivative(m);
    }
    std::vector<double> cur = {0.0};
    std::vector<double> next;
    for (int g = 1; g <= m; ++g) {
        next.clear();
        for (double v : cur) {
            const int k = law.sample_count(stream);
            for (int c = 0; c < k; ++c) next.push_back(v + law.sample_displacement(stream));
        }
        if (next.size() > cap) {
            if (cap_hit != nullptr) *cap_hit = true;
            break; // keep the deepest fully grown level
        }
        cur.swap(next);
        if (cur.empty()) break;
    }
    double d = 0.0;
    for (double v : cur) d += v * std::exp(-v);
    return d;
}

SpineRealization sample_spine(const OffspringLaw& law, const RenewalTable& renewal, double alpha,
                              long n, int m, std::uint64_t side_cap, rng::Stream& spine_stream,
                              rng::Stream* side_stream, SpineVariant variant) {
    if (n < 0 || m < 0) throw ConfigInvalid("sample_spine: n and m must be nonnegative");
    const WalkLaw walk = associated_walk(law);
    const double c8 = c8_constant(law);
    rng::Stream& sides = side_stream != nullptr ? *side_stream : spine_stream;

    SpineRealization spine;
    spine.alpha = alpha;
    spine.side_depth = m;
    spine.degenerate_side_depth = m == 0;
    spine.v.resize(static_cast<std::size_t>(n) + 1);
    spine.dhat.resize(static_cast<std::size_t>(n));
    spine.sib_offsets.resize(static_cast<std::size_t>(n) + 1, 0);
    spine.v[0] = 0.0;

    double v = 0.0;
    for (long k = 0; k < n; ++k) {
        const SpineStep step = spine_step(law, walk, renewal, alpha, v, spine_stream, variant);
        double dhat = 0.0;
        for (std::size_t c = 0; c < step.children.size(); ++c) {
            if (c == step.spine_index) continue;
            const double u = step.children[c];
            spine.sib_disp.push_back(u);
            if (m > 0) {
                bool cap_hit = false;
                const double d_side = side_subtree_derivative(law, m, side_cap, sides, &cap_hit);
                if (cap_hit) ++spine.side_caps_hit;
                dhat += std::exp(-u) * d_side;
            }
        }
        dhat *= c8;
        if (dhat < 0.0) {
            // Finite-depth derivative martingales can be negative even though
            // their limits are positive; the decomposition needs Dhat >= 0.
            dhat = 0.0;
            ++spine.dhat_clamped;
        }
        spine.dhat[static_cast<std::size_t>(k)] = dhat;
        spine.sib_offsets[static_cast<std::size_t>(k) + 1] =
            static_cast<std::uint32_t>(spine.sib_disp.size());
        v += step.children[step.spine_index];
        spine.v[static_cast<std::size_t>(k) + 1] = v;
    }
    return spine;
}

SpineBallMass spine_ball_mass(const SpineRealization& spine, long n, long window) {
    const long last = static_cast<long>(spine.dhat.size()) - 1;
    if (n < 0 || window < 0 || n + window > last)
        throw WindowOutOfRange("spine_ball_mass: window beyond the sampled spine");
    SpineBallMass out;
    for (long k = n; k <= n + window; ++k)
        out.partial_sum += std::exp(-spine.v[static_cast<std::size_t>(k)]) *
                           spine.dhat[static_cast<std::size_t>(k)];
    double tail_min = 0.0;
    bool any = false;
    for (std::size_t k = static_cast<std::size_t>(n + window) + 1; k < spine.v.size(); ++k) {
        tail_min = any ? std::min(tail_min, spine.v[k]) : spine.v[k];
        any = true;
    }
    out.tail_proxy = any ? std::exp(-tail_min) : 0.0;
    return out;
}

std::vector<double> spine_mass_series(const SpineRealization& spine) {
    std::vector<double> mass(spine.dhat.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = spine.dhat.size(); k-- > 0;) {
        acc += std::exp(-spine.v[k]) * spine.dhat[k];
        mass[k] = acc;
    }
    return mass;
}

num::KsResult spine_marginal_check(const OffspringLaw& law, const RenewalTable& renewal,
                                   double alpha, long n, long reps, rng::Stream& stream,
                                   SpineVariant variant) {
    if (reps < 1000) throw ConfigInvalid("spine_marginal_check: need at least 1000 replicas");
    const WalkLaw walk = associated_walk(law);
    std::vector<double> spine_samples(static_cast<std::size_t>(reps));
    for (long rep = 0; rep < reps; ++rep) {
        double v = 0.0;
        for (long k = 0; k < n; ++k) {
            const SpineStep step = spine_step(law, walk, renewal, alpha, v, stream, variant);
            v += step.children[step.spine_index];
        }
        spine_samples[static_cast<std::size_t>(rep)] = v;
    }
    std::vector<double> walk_samples(static_cast<std::size_t>(reps));
    for (long rep = 0; rep < reps; ++rep) {
        double s = 0.0;
        for (long k = 0; k < n; ++k) s = conditioned_step(s, walk, renewal, alpha, stream);
        walk_samples[static_cast<std::size_t>(rep)] = s;
    }
    return num::ks_two_sample(std::move(spine_samples), std::move(walk_samples));
}

DhatBoundsReport dhat_bounds_check(const std::vector<SpineRealization>& spines, double delta,
                                   const std::vector<long>& n0_grid,
                                   const std::vector<double>& probes) {
    DhatBoundsReport report;
    if (spines.empty()) return report;
    const long depth = static_cast<long>(spines.front().dhat.size());

    for (long n0 : n0_grid) {
        std::size_t violators = 0;
        for (const auto& spine : spines) {
            bool violated = false;
            for (long k = n0; k < depth && !violated; ++k) {
                const double bound = std::exp(std::pow(static_cast<double>(k), delta));
                if (spine.dhat[static_cast<std::size_t>(k)] > bound) violated = true;
            }
            if (violated) ++violators;
        }
        report.upper_violations_by_n0.emplace_back(
            n0, static_cast<double>(violators) / static_cast<double>(spines.size()));
    }

    std::vector<double> block_maxima;
    for (const auto& spine : spines) {
        for (long b = 1;; ++b) {
            const long lo = b * b * b;
            const long hi = (b + 1) * (b + 1) * (b + 1);
            if (hi > depth) break;
            double mx = 0.0;
            for (long k = lo; k < hi; ++k)
                mx = std::max(mx, spine.dhat[static_cast<std::size_t>(k)]);
            block_maxima.push_back(mx);
        }
    }
    if (!block_maxima.empty()) {
        report.eta_95 = num::quantile(block_maxima, 0.05);
        report.eta_positive = report.eta_95 > 0.0;
        for (double probe : probes) {
            std::size_t hit = 0;
            for (double mx : block_maxima)
                if (mx >= probe) ++hit;
            report.probe_satisfaction.emplace_back(
                probe, static_cast<double>(hit) / static_cast<double>(block_maxima.size()));
        }
    }
    return report;
}

} // namespace cascade
