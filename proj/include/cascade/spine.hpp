#pragma once

// Size-biased spine sampling. The distinguished particle reproduces under the
// tilted point process; one child is selected as the next spine particle with
// probability proportional to R(alpha + V) e^{-V} on the barrier event, and
// every other child seeds an ordinary branching random walk whose derivative
// martingale feeds the ball-mass decomposition
//   mu(B(w_n)) = sum_{k >= n} e^{-V(w_k)} Dhat_k.
// For i.i.d.-children laws the sampling is exact: size-biased child count,
// uniform spine slot, h-transform increment for the spine child.

#include "cascade/numeric.hpp"
#include "cascade/offspring.hpp"
#include "cascade/rng.hpp"
#include "cascade/walk.hpp"

#include <cstdint>
#include <vector>

namespace cascade {

enum class SpineVariant {
    Exact,
    MutatedUnbiased, // negative control: spine child drawn from the plain law
};

struct SpineStep {
    std::vector<double> children; // displacements, spine child included
    std::size_t spine_index = 0;
};

SpineStep spine_step(const OffspringLaw& law, const WalkLaw& walk, const RenewalTable& renewal,
                     double alpha, double v, rng::Stream& stream,
                     SpineVariant variant = SpineVariant::Exact);

struct SpineRealization {
    double alpha = 0.0;
    int side_depth = 0;
    std::vector<double> v;    // V(w_0) .. V(w_n)
    std::vector<double> dhat; // Dhat_k for k = 0 .. n-1 (c8-scaled, clamped at 0)
    std::vector<std::uint32_t> sib_offsets; // prefix offsets into sib_disp per step
    std::vector<double> sib_disp;           // non-spine child displacements
    std::uint64_t side_caps_hit = 0;
    std::uint64_t dhat_clamped = 0;
    bool degenerate_side_depth = false; // m = 0: every Dhat is 0 by definition
};

SpineRealization sample_spine(const OffspringLaw& law, const RenewalTable& renewal, double alpha,
                              long n, int m, std::uint64_t side_cap, rng::Stream& spine_stream,
                              rng::Stream* side_stream = nullptr,
                              SpineVariant variant = SpineVariant::Exact);

struct SpineBallMass {
    double partial_sum = 0.0; // sum_{k=n}^{n+K} e^{-V(w_k)} Dhat_k
    double tail_proxy = 0.0;  // e^{-min of the realized spine beyond n+K}
};

SpineBallMass spine_ball_mass(const SpineRealization& spine, long n, long window);

// mass(n) = sum_{k=n}^{N-1} e^{-V(w_k)} Dhat_k for every n, by suffix sums.
std::vector<double> spine_mass_series(const SpineRealization& spine);

num::KsResult spine_marginal_check(const OffspringLaw& law, const RenewalTable& renewal,
                                   double alpha, long n, long reps, rng::Stream& stream,
                                   SpineVariant variant = SpineVariant::Exact);

struct DhatBoundsReport {
    // Fraction of spines with some Dhat_n > exp(n^delta) for n >= n0.
    std::vector<std::pair<long, double>> upper_violations_by_n0;
    // Satisfaction fractions of max over cubic blocks >= probe.
    std::vector<std::pair<double, double>> probe_satisfaction;
    double eta_95 = 0.0; // 5th percentile of cubic-block maxima
    bool eta_positive = false;
};

DhatBoundsReport dhat_bounds_check(const std::vector<SpineRealization>& spines, double delta,
                                   const std::vector<long>& n0_grid,
                                   const std::vector<double>& probes);

// D_{x,m} of a side subtree rooted at relative position 0.
double side_subtree_derivative(const OffspringLaw& law, int m, std::uint64_t cap,
                               rng::Stream& stream, bool* cap_hit);

} // namespace cascade
