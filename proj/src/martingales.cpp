#include "cascade/martingales.hpp"

#include "cascade/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cascade {

namespace {

void check_level(const BrwTree& tree, int n, const char* what) {
    if (n < 0 || n > tree.depth) throw DepthOutOfRange(std::string(what) + ": level out of range");
}

// Prefix minima (including the root at 0) for one generation, computed by a
// sweep from the root.
std::vector<std::vector<double>> prefix_minima_levels(const BrwTree& tree, int n) {
    std::vector<std::vector<double>> mins(static_cast<std::size_t>(n) + 1);
    mins[0] = {0.0};
    for (int g = 1; g <= n; ++g) {
        const auto& gen = tree.generations[static_cast<std::size_t>(g)];
        auto& cur = mins[static_cast<std::size_t>(g)];
        const auto& prev = mins[static_cast<std::size_t>(g - 1)];
        cur.resize(gen.size());
        for (std::size_t i = 0; i < gen.size(); ++i)
            cur[i] = std::min(prev[gen.parent[i]], gen.position[i]);
    }
    return mins;
}

} // namespace

double additive_martingale(const BrwTree& tree, int n) {
    check_level(tree, n, "additive_martingale");
    double sum = 0.0;
    for (double v : tree.generations[static_cast<std::size_t>(n)].position) sum += std::exp(-v);
    return sum;
}

double derivative_martingale(const BrwTree& tree, int n) {
    check_level(tree, n, "derivative_martingale");
    double sum = 0.0;
    for (double v : tree.generations[static_cast<std::size_t>(n)].position)
        sum += v * std::exp(-v);
    return sum;
}

double truncated_martingale(const BrwTree& tree, int n, double alpha,
                            const RenewalTable& renewal) {
    check_level(tree, n, "truncated_martingale");
    if (alpha < 0.0) throw DomainError("truncated_martingale: alpha must be nonnegative");
    const auto mins = prefix_minima_levels(tree, n);
    const auto& gen = tree.generations[static_cast<std::size_t>(n)];
    const auto& gmin = mins[static_cast<std::size_t>(n)];
    double sum = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i)
        if (gmin[i] >= -alpha) sum += renewal(gen.position[i] + alpha) * std::exp(-gen.position[i]);
    return sum;
}

PartitionValue partition_function(const BrwTree& tree, double beta, int n) {
    check_level(tree, n, "partition_function");
    if (beta <= 0.0) throw DomainError("partition_function: beta must be positive");
    PartitionValue out;
    for (double v : tree.generations[static_cast<std::size_t>(n)].position)
        out.z += std::exp(-beta * v);
    if (beta < 1.0) {
        out.suggested_normalization = std::pow(law_rho(tree.law, beta), -static_cast<double>(n));
    } else if (beta == 1.0) {
        out.suggested_normalization = std::sqrt(static_cast<double>(n));
    } else {
        out.suggested_normalization = std::pow(static_cast<double>(n), 1.5 * beta);
    }
    return out;
}

MartingaleTrace compute_martingale_trace(const BrwTree& tree, double alpha,
                                         const RenewalTable* renewal) {
    MartingaleTrace trace;
    trace.alpha = alpha;
    const int depth = tree.depth;
    trace.additive.resize(static_cast<std::size_t>(depth) + 1);
    trace.derivative.resize(static_cast<std::size_t>(depth) + 1);
    trace.seneta_heyde.resize(static_cast<std::size_t>(depth) + 1);
    if (renewal != nullptr) trace.truncated.resize(static_cast<std::size_t>(depth) + 1);

    std::vector<double> prev_min = {0.0};
    std::vector<double> cur_min;
    for (int g = 0; g <= depth; ++g) {
        const auto& gen = tree.generations[static_cast<std::size_t>(g)];
        if (g > 0) {
            cur_min.resize(gen.size());
            for (std::size_t i = 0; i < gen.size(); ++i)
                cur_min[i] = std::min(prev_min[gen.parent[i]], gen.position[i]);
            prev_min.swap(cur_min);
        }
        double w = 0.0, d = 0.0, t = 0.0;
        for (std::size_t i = 0; i < gen.size(); ++i) {
            const double v = gen.position[i];
            const double e = std::exp(-v);
            w += e;
            d += v * e;
            if (renewal != nullptr && prev_min[i] >= -alpha) t += (*renewal)(v + alpha) * e;
        }
        trace.additive[static_cast<std::size_t>(g)] = w;
        trace.derivative[static_cast<std::size_t>(g)] = d;
        trace.seneta_heyde[static_cast<std::size_t>(g)] = std::sqrt(static_cast<double>(g)) * w;
        if (renewal != nullptr) trace.truncated[static_cast<std::size_t>(g)] = t;
    }
    return trace;
}

double ball_mass_finite(const BrwTree& tree, NodeId node, int n) {
    if (!tree.valid_node(node)) throw InvalidNode("ball_mass_finite: invalid node");
    check_level(tree, n, "ball_mass_finite");
    if (n < node.gen) throw DepthOutOfRange("ball_mass_finite: level above the node");
    // Descendant masks propagated level by level.
    std::vector<bool> mask(tree.generations[static_cast<std::size_t>(node.gen)].size(), false);
    mask[node.index] = true;
    std::vector<bool> next;
    for (int g = node.gen + 1; g <= n; ++g) {
        const auto& gen = tree.generations[static_cast<std::size_t>(g)];
        next.assign(gen.size(), false);
        for (std::size_t i = 0; i < gen.size(); ++i) next[i] = mask[gen.parent[i]];
        mask.swap(next);
    }
    const auto& gen = tree.generations[static_cast<std::size_t>(n)];
    double sum = 0.0;
    for (std::size_t i = 0; i < gen.size(); ++i)
        if (mask[i]) sum += std::exp(-gen.position[i]);
    return sum;
}

BallMassEstimate ball_mass_estimate(const BrwTree& tree, NodeId node, double alpha, int m,
                                    const RenewalTable& renewal) {
    if (!tree.valid_node(node)) throw InvalidNode("ball_mass_estimate: invalid node");
    if (m < 0 || node.gen + m > tree.depth)
        throw InsufficientDepth("ball_mass_estimate: node not grown deep enough");
    BallMassEstimate est;
    est.node = node;
    est.alpha = alpha;
    est.side_depth = m;
    est.c0 = renewal.c0();
    est.c8 = c8_constant(tree.law);

    const double v_node = tree.position(node);
    const auto prefix = ancestral_prefix_minima(tree, node);
    const double node_prefix_min = prefix.empty() ? 0.0 : prefix.back();
    const bool node_alive = node_prefix_min >= -alpha;

    // D^(alpha)_{node,k} for the last three side depths, one sweep.
    // The relative prefix minimum includes both endpoints of [node, y].
    std::vector<double> approx;
    std::vector<std::uint64_t> idx_map; // node indices at the current level below `node`
    std::vector<double> relmin;
    idx_map = {node.index};
    relmin = {std::min(0.0, 0.0)};
    double level0 = v_node >= -alpha ? renewal(v_node + alpha) : 0.0;
    if (m == 0) approx.push_back(level0);
    std::vector<std::uint64_t> next_idx;
    std::vector<double> next_rel;
    for (int k = 1; k <= m; ++k) {
        const int g = node.gen + k;
        const auto& gen = tree.generations[static_cast<std::size_t>(g)];
        // Children of the tracked set, found by parent membership.
        // Tracked indices are contiguous in flat order, so a single scan works.
        next_idx.clear();
        next_rel.clear();
        std::size_t cursor = 0;
        for (std::size_t i = 0; i < gen.size(); ++i) {
            const std::uint64_t p = gen.parent[i];
            while (cursor < idx_map.size() && idx_map[cursor] < p) ++cursor;
            if (cursor == idx_map.size()) break;
            if (idx_map[cursor] != p) continue;
            next_idx.push_back(i);
            next_rel.push_back(std::min(relmin[cursor], gen.position[i] - v_node));
        }
        idx_map.swap(next_idx);
        relmin.swap(next_rel);
        if (k >= std::max(1, m - 2)) {
            double sum = 0.0;
            for (std::size_t i = 0; i < idx_map.size(); ++i) {
                const double vy = gen.position[idx_map[i]];
                const double rel = vy - v_node;
                // 1{min over [node, y] of V >= -alpha}
                if (v_node >= -alpha && relmin[i] + v_node >= -alpha)
                    sum += renewal(vy + alpha) * std::exp(-rel);
            }
            approx.push_back(sum);
        }
    }

    const double d_alpha = approx.empty() ? level0 : approx.back();
    est.mu_alpha = node_alive ? std::exp(-v_node) * d_alpha : 0.0;
    double rel_change = 0.0;
    for (std::size_t i = 1; i < approx.size(); ++i) {
        const double denom = std::max(std::fabs(approx.back()), 1e-300);
        rel_change = std::max(rel_change, std::fabs(approx[i] - approx[i - 1]) / denom);
    }
    est.rel_change = rel_change;
    est.valid = min_position(tree) > -alpha;
    // mu(B) = c8 e^{-V} D while mu^(alpha)(B) = c0 e^{-V} D on the valid
    // event, hence the c8/c0 conversion.
    est.mu = est.valid && est.c0 > 0.0 ? (est.c8 / est.c0) * est.mu_alpha : 0.0;
    return est;
}

} // namespace cascade
