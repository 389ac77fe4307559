#pragma once

// Generation-occupancy dynamics for lattice offspring laws. The per-offset
// population counts form a Markov chain whose transitions are binomial
// splits, so a depth-m realization costs O(m * span_width) binomial draws
// instead of O(mean_count^m) per-particle draws. Any functional of the
// per-generation histograms (additive/derivative martingales, partition
// functions, minima) has exactly the same law as on a per-particle tree.

#include "cascade/offspring.hpp"
#include "cascade/rng.hpp"

#include <cstdint>
#include <vector>

namespace cascade {

struct LatticeHistogram {
    double span = 0.0;
    int depth = 0;
    bool extinct = false;
    std::vector<long> base;                         // offset of counts[g][0]
    std::vector<std::vector<std::uint64_t>> counts; // per generation

    double additive(int n) const;                 // W_n
    double derivative(int n) const;               // D_n
    double partition(int n, double beta) const;   // Z_{beta,n}
    long min_offset() const;                      // over all generations
    std::uint64_t population(int n) const;
};

bool lattice_histogram_supported(const OffspringLaw& law);

LatticeHistogram grow_lattice_histogram(const OffspringLaw& law, int depth, rng::Stream& stream);

} // namespace cascade
