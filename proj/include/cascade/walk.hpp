#pragma once

// The one-dimensional random walk associated with a boundary-case offspring
// law, its renewal function R, and the walk conditioned to stay in
// [-alpha, infinity) via the Doob h-transform with kernel proportional to
// R(y + alpha) P(S1 + x in dy).

#include "cascade/offspring.hpp"
#include "cascade/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cascade {

enum class WalkKind { Atoms, Gaussian };
enum class RenewalMethod { ExactLattice, MonteCarlo };

struct WalkAtom {
    double value = 0.0;
    double prob = 0.0;
};

struct WalkLaw {
    WalkKind kind = WalkKind::Atoms;
    std::vector<WalkAtom> atoms;
    double sigma2 = 0.0;
    bool lattice = false;
    double span = 0.0;
    std::string provenance; // fingerprint of the generating offspring law

    double sample(rng::Stream& stream) const;
    double sd() const;
};

WalkLaw associated_walk(const OffspringLaw& law);

struct LadderSummary {
    double e_abs_h1 = 0.0; // E|H1|, first strictly descending ladder height
    double se = 0.0;
    std::uint64_t reps = 0;
    std::uint64_t overflows = 0; // excursions cut by the step cap
    std::vector<double> sample; // first few |H1| draws, for inspection
};

LadderSummary ladder_heights(const WalkLaw& walk, long reps, rng::Stream& stream,
                             std::uint64_t step_cap = 10'000'000);

class RenewalTable {
public:
    // R(u); 0 for u < 0, linear (lattice: staircase) extension beyond u_max.
    double operator()(double u) const;

    double grid_step = 0.0;
    double u_max = 0.0;
    std::vector<double> values;
    std::vector<double> se; // per-node standard errors (Monte Carlo only)
    double slope = 0.0;     // extension slope, 1/E|H1|
    double e_abs_h1 = 0.0;
    double se_e_abs_h1 = 0.0;
    double c0_tail_fit = 0.0; // slope fitted to the top half of the table
    double c3 = 0.0;          // fitted constant in R(u+x) - R(u) <= c3 (1+x)
    RenewalMethod method = RenewalMethod::MonteCarlo;
    bool step_semantics = false; // lattice staircase evaluation
    std::uint64_t overflow_count = 0;
    std::uint64_t reps = 0;
    std::string walk_fingerprint;

    double c0() const { return slope; }
};

RenewalTable build_renewal(const WalkLaw& walk, double u_max, double grid, RenewalMethod method,
                           long reps = 0, rng::Stream* stream = nullptr,
                           std::uint64_t step_cap = 10'000'000);

struct ResidualEstimate {
    double value = 0.0;
    double se = 0.0;
};

// R(u) - E[R(S1 + u) 1{S1 >= -u}], estimated with `reps` fresh increments
// (atoms: exact closed sum, se = 0).
ResidualEstimate renewal_identity_residual(const RenewalTable& renewal, const WalkLaw& walk,
                                           double u, long reps, rng::Stream* stream);

// Exact one-step kernel for atom walks: next states with probabilities
// proportional to 1{y >= -alpha} R(y + alpha) P(S1 + state in dy).
void conditioned_kernel_atoms(double state, const WalkLaw& walk, const RenewalTable& renewal,
                              double alpha, std::vector<WalkAtom>& out);

double conditioned_step(double state, const WalkLaw& walk, const RenewalTable& renewal,
                        double alpha, rng::Stream& stream);

struct ConditionedPath {
    double alpha = 0.0;
    double start = 0.0;
    std::vector<double> values; // S_1 .. S_n
    std::string law_fingerprint;
    std::string method = "h-transform-kernel";
};

ConditionedPath conditioned_path(const WalkLaw& walk, const RenewalTable& renewal, double alpha,
                                 long n, rng::Stream& stream, double start = 0.0);

// P[min_{n>=1} S_n >= x | S_0 = y] under the conditioned walk: R(y-x)/R(alpha+y).
// Weak inequality at lattice points.
double stay_above_probability(const RenewalTable& renewal, double alpha, double y, double x);

struct TailEstimate {
    double value = 0.0;
    double se = 0.0;
};

// P^{up}_alpha[min_{k>=n} S_k <= x], one estimate per requested n, simulated to
// `horizon` with the analytic stay-above closure applied at the horizon state.
// All entries share paths, so the estimates are monotone in n by construction.
std::vector<TailEstimate> min_tail_probability(const WalkLaw& walk, const RenewalTable& renewal,
                                               double alpha, double x,
                                               const std::vector<long>& ns, long horizon,
                                               long reps, rng::Stream& stream);

} // namespace cascade
