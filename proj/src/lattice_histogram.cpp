#include "cascade/lattice_histogram.hpp"

#include "cascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cascade {

namespace {

// Splits `total` draws across the given probabilities with chained binomials.
void multinomial_split(std::uint64_t total, const std::vector<double>& probs,
                       std::vector<std::uint64_t>& out, rng::Stream& stream) {
    out.assign(probs.size(), 0);
    double remaining_p = 1.0;
    std::uint64_t remaining_n = total;
    for (std::size_t i = 0; i + 1 < probs.size() && remaining_n > 0; ++i) {
        const double p = std::clamp(probs[i] / remaining_p, 0.0, 1.0);
        std::binomial_distribution<std::int64_t> bin(static_cast<std::int64_t>(remaining_n), p);
        const auto k = static_cast<std::uint64_t>(bin(stream));
        out[i] = k;
        remaining_n -= k;
        remaining_p -= probs[i];
        if (remaining_p <= 0.0) break;
    }
    if (!probs.empty()) out.back() += remaining_n;
}

} // namespace

double LatticeHistogram::additive(int n) const {
    if (n < 0 || n > depth) throw DepthOutOfRange("histogram additive: out of range");
    const auto& row = counts[static_cast<std::size_t>(n)];
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] != 0)
            sum += static_cast<double>(row[i]) *
                   std::exp(-static_cast<double>(base[static_cast<std::size_t>(n)] +
                                                 static_cast<long>(i)) *
                            span);
    return sum;
}

double LatticeHistogram::derivative(int n) const {
    if (n < 0 || n > depth) throw DepthOutOfRange("histogram derivative: out of range");
    const auto& row = counts[static_cast<std::size_t>(n)];
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] != 0) {
            const double v =
                static_cast<double>(base[static_cast<std::size_t>(n)] + static_cast<long>(i)) *
                span;
            sum += static_cast<double>(row[i]) * v * std::exp(-v);
        }
    return sum;
}

double LatticeHistogram::partition(int n, double beta) const {
    if (n < 0 || n > depth) throw DepthOutOfRange("histogram partition: out of range");
    const auto& row = counts[static_cast<std::size_t>(n)];
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] != 0) {
            const double v =
                static_cast<double>(base[static_cast<std::size_t>(n)] + static_cast<long>(i)) *
                span;
            sum += static_cast<double>(row[i]) * std::exp(-beta * v);
        }
    return sum;
}

long LatticeHistogram::min_offset() const {
    long m = 0;
    for (std::size_t g = 0; g < counts.size(); ++g)
        for (std::size_t i = 0; i < counts[g].size(); ++i)
            if (counts[g][i] != 0) {
                m = std::min(m, base[g] + static_cast<long>(i));
                break; // offsets ascend within a row
            }
    return m;
}

std::uint64_t LatticeHistogram::population(int n) const {
    if (n < 0 || n > depth) throw DepthOutOfRange("histogram population: out of range");
    std::uint64_t total = 0;
    for (std::uint64_t c : counts[static_cast<std::size_t>(n)]) total += c;
    return total;
}

bool lattice_histogram_supported(const OffspringLaw& law) {
    if (law.kind == OffspringKind::GaussianBinary || !law.lattice || !law.iid_children)
        return false;
    for (const Atom& a : law.atoms) {
        const double k = a.value / law.lattice_span;
        if (std::fabs(k - std::round(k)) > 1e-7) return false;
    }
    return true;
}

LatticeHistogram grow_lattice_histogram(const OffspringLaw& law, int depth, rng::Stream& stream) {
    if (!lattice_histogram_supported(law))
        throw MethodMismatch("grow_lattice_histogram: law has no lattice histogram dynamics");
    if (depth < 0) throw ConfigInvalid("grow_lattice_histogram: negative depth");

    std::vector<long> atom_offsets;
    std::vector<double> atom_probs;
    for (const Atom& a : law.atoms) {
        atom_offsets.push_back(static_cast<long>(std::llround(a.value / law.lattice_span)));
        atom_probs.push_back(a.prob);
    }
    const long min_off = *std::min_element(atom_offsets.begin(), atom_offsets.end());
    const long max_off = *std::max_element(atom_offsets.begin(), atom_offsets.end());

    // Deterministic count laws skip the count multinomial.
    long det_count = -1;
    for (std::size_t k = 0; k < law.count_probs.size(); ++k)
        if (law.count_probs[k] > 1.0 - 1e-12) det_count = static_cast<long>(k);

    LatticeHistogram hist;
    hist.span = law.lattice_span;
    hist.depth = depth;
    hist.base.resize(static_cast<std::size_t>(depth) + 1);
    hist.counts.resize(static_cast<std::size_t>(depth) + 1);
    hist.base[0] = 0;
    hist.counts[0] = {1};

    std::vector<std::uint64_t> count_split;
    std::vector<std::uint64_t> atom_split;
    for (int g = 1; g <= depth; ++g) {
        const auto& prev = hist.counts[static_cast<std::size_t>(g - 1)];
        const long prev_base = hist.base[static_cast<std::size_t>(g - 1)];
        const long next_base = prev_base + min_off;
        const long next_size =
            static_cast<long>(prev.size()) + (max_off - min_off);
        auto& next = hist.counts[static_cast<std::size_t>(g)];
        hist.base[static_cast<std::size_t>(g)] = next_base;
        next.assign(static_cast<std::size_t>(next_size), 0);

        bool any = false;
        for (std::size_t i = 0; i < prev.size(); ++i) {
            const std::uint64_t parents = prev[i];
            if (parents == 0) continue;
            std::uint64_t children = 0;
            if (det_count >= 0) {
                children = parents * static_cast<std::uint64_t>(det_count);
            } else {
                multinomial_split(parents, law.count_probs, count_split, stream);
                for (std::size_t k = 0; k < count_split.size(); ++k)
                    children += count_split[k] * static_cast<std::uint64_t>(k);
            }
            if (children == 0) continue;
            any = true;
            multinomial_split(children, atom_probs, atom_split, stream);
            const long j = prev_base + static_cast<long>(i);
            for (std::size_t a = 0; a < atom_split.size(); ++a)
                next[static_cast<std::size_t>(j + atom_offsets[a] - next_base)] += atom_split[a];
        }
        if (!any) {
            hist.extinct = true;
            for (int gg = g; gg <= depth; ++gg) {
                hist.base[static_cast<std::size_t>(gg)] = next_base;
                hist.counts[static_cast<std::size_t>(gg)].assign(1, 0);
            }
            break;
        }
    }
    return hist;
}

} // namespace cascade
