#pragma once

// Martingales and finite-level cascade measures on a realized tree:
// the additive martingale W_n = sum e^{-V}, the derivative martingale
// D_n = sum V e^{-V}, the truncated martingale
// D_n^(alpha) = sum R(V + alpha) e^{-V} 1{prefix-min >= -alpha},
// partition functions Z_{beta,n}, and ball-mass estimates.
// Sums always run in flat-index order so results are bit-reproducible.

#include "cascade/brw.hpp"
#include "cascade/walk.hpp"

#include <string>
#include <vector>

namespace cascade {

double additive_martingale(const BrwTree& tree, int n);
double derivative_martingale(const BrwTree& tree, int n);
double truncated_martingale(const BrwTree& tree, int n, double alpha,
                            const RenewalTable& renewal);

struct PartitionValue {
    double z = 0.0;
    double suggested_normalization = 1.0;
};

// Z = sum e^{-beta V}; the suggested normalization is rho(beta)^{-n} for
// beta < 1, sqrt(n) at beta = 1, n^{3 beta / 2} for beta > 1. It is attached,
// never applied.
PartitionValue partition_function(const BrwTree& tree, double beta, int n);

struct MartingaleTrace {
    std::vector<double> additive;      // W_n
    std::vector<double> derivative;    // D_n
    std::vector<double> truncated;     // D_n^(alpha)
    std::vector<double> seneta_heyde;  // sqrt(n) W_n
    double alpha = 0.0;
};

MartingaleTrace compute_martingale_trace(const BrwTree& tree, double alpha,
                                         const RenewalTable* renewal);

double ball_mass_finite(const BrwTree& tree, NodeId node, int n);

struct BallMassEstimate {
    NodeId node;
    double alpha = 0.0;
    int side_depth = 0;
    double mu_alpha = 0.0; // 1{prefix-min >= -alpha} e^{-V(x)} D^(alpha)_{x,m}
    double mu = 0.0;       // (c8/c0) mu_alpha, only when valid
    bool valid = false;    // min over the whole tree > -alpha
    double rel_change = 0.0; // relative change of the approximant, last 3 levels
    double c0 = 0.0;
    double c8 = 0.0;
};

BallMassEstimate ball_mass_estimate(const BrwTree& tree, NodeId node, double alpha, int m,
                                    const RenewalTable& renewal);

} // namespace cascade
