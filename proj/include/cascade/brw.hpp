#pragma once

// Branching random walk realizations on the Ulam-Harris tree, stored as
// per-generation flat arrays (parent index, displacement, position).
// Generation sweeps dominate every algorithm here, so locality beats
// pointer trees.

#include "cascade/offspring.hpp"
#include "cascade/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cascade {

struct NodeId {
    int gen = 0;
    std::uint64_t index = 0;
};

inline constexpr std::uint64_t kDefaultGenerationCap = 1ull << 25;

class BrwTree {
public:
    struct Generation {
        std::vector<std::uint32_t> parent;
        std::vector<double> displacement;
        std::vector<double> position;
        std::size_t size() const { return position.size(); }
    };

    int depth = 0; // requested depth; generations beyond extinction are empty
    bool extinct = false;
    int extinct_at = -1;
    std::vector<Generation> generations;
    OffspringLaw law;

    std::size_t population(int n) const;
    bool valid_node(NodeId id) const;
    double position(NodeId id) const;
};

struct CapExceeded : Error {
    CapExceeded(std::string msg, std::shared_ptr<BrwTree> partial_tree, int gen)
        : Error(std::move(msg)), partial(std::move(partial_tree)), generation(gen) {}
    std::shared_ptr<BrwTree> partial;
    int generation = 0;
};

BrwTree grow_tree(const OffspringLaw& law, int depth, std::uint64_t cap, rng::Stream& stream);

std::vector<double> generation_positions(const BrwTree& tree, int n);
double min_position(const BrwTree& tree);

// Positions V(x_1), ..., V(x_n) along the ancestor line; empty for the root.
std::vector<double> ancestral_path(const BrwTree& tree, NodeId node);

// Prefix minima of the ancestral path including the root position 0.
std::vector<double> ancestral_prefix_minima(const BrwTree& tree, NodeId node);

using PathFunctional = std::function<double(std::span<const double>)>;

struct PairedEstimate {
    double brw = 0.0;
    double brw_se = 0.0;
    double walk = 0.0;
    double walk_se = 0.0;
    bool ci99_overlap(const PairedEstimate&) = delete;
};

// Checks whether two 99% confidence intervals overlap.
bool ci99_overlap(double a, double se_a, double b, double se_b);

// lhs: E[sum_{|x|=n} g(V(x_1)..V(x_n)) e^{-V(x)}] over tree replicas.
// rhs: E[g(S_1..S_n)] over associated-walk replicas.
PairedEstimate many_to_one_expectation(const OffspringLaw& law, const PathFunctional& g, int n,
                                       long reps, rng::Stream& stream);

void write_tree_binary(const BrwTree& tree, const std::string& path);
BrwTree read_tree_binary(const std::string& path, const OffspringLaw& law);

} // namespace cascade
