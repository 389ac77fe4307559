#include "cascade/brw.hpp"

#include "cascade/errors.hpp"
#include "cascade/numeric.hpp"
#include "cascade/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace cascade {

std::size_t BrwTree::population(int n) const {
    if (n < 0 || n > depth) throw DepthOutOfRange("population: generation out of range");
    return generations[static_cast<std::size_t>(n)].size();
}

bool BrwTree::valid_node(NodeId id) const {
    return id.gen >= 0 && id.gen <= depth &&
           id.index < generations[static_cast<std::size_t>(id.gen)].size();
}

double BrwTree::position(NodeId id) const {
    if (!valid_node(id)) throw InvalidNode("position: invalid node id");
    return generations[static_cast<std::size_t>(id.gen)].position[id.index];
}

BrwTree grow_tree(const OffspringLaw& law, int depth, std::uint64_t cap, rng::Stream& stream) {
    if (depth < 0) throw ConfigInvalid("grow_tree: depth must be nonnegative");
    if (cap < 1) throw ConfigInvalid("grow_tree: cap must be at least 1");
    auto tree = std::make_shared<BrwTree>();
    tree->law = law;
    tree->depth = depth;
    tree->generations.resize(static_cast<std::size_t>(depth) + 1);
    tree->generations[0].parent = {0};
    tree->generations[0].displacement = {0.0};
    tree->generations[0].position = {0.0};

    for (int g = 1; g <= depth; ++g) {
        const auto& prev = tree->generations[static_cast<std::size_t>(g - 1)];
        auto& cur = tree->generations[static_cast<std::size_t>(g)];
        if (prev.size() == 0) continue; // extinct; later generations stay empty
        cur.parent.reserve(prev.size() * 2);
        cur.displacement.reserve(prev.size() * 2);
        cur.position.reserve(prev.size() * 2);
        for (std::size_t i = 0; i < prev.size(); ++i) {
            const int k = law.sample_count(stream);
            if (cur.size() + static_cast<std::size_t>(k) > cap) {
                tree->depth = g - 1;
                tree->generations.resize(static_cast<std::size_t>(g));
                throw CapExceeded("grow_tree: generation cap exceeded", tree, g);
            }
            for (int c = 0; c < k; ++c) {
                const double disp = law.sample_displacement(stream);
                cur.parent.push_back(static_cast<std::uint32_t>(i));
                cur.displacement.push_back(disp);
                cur.position.push_back(prev.position[i] + disp);
            }
        }
        if (cur.size() == 0 && !tree->extinct) {
            tree->extinct = true;
            tree->extinct_at = g;
        }
    }
    return std::move(*tree);
}

std::vector<double> generation_positions(const BrwTree& tree, int n) {
    if (n < 0 || n > tree.depth) throw DepthOutOfRange("generation_positions: out of range");
    const auto& gen = tree.generations[static_cast<std::size_t>(n)];
    return gen.position;
}

double min_position(const BrwTree& tree) {
    double m = 0.0;
    for (const auto& gen : tree.generations)
        for (double v : gen.position) m = std::min(m, v);
    return m;
}

std::vector<double> ancestral_path(const BrwTree& tree, NodeId node) {
    if (!tree.valid_node(node)) throw InvalidNode("ancestral_path: invalid node id");
    std::vector<double> path(static_cast<std::size_t>(node.gen));
    std::uint64_t idx = node.index;
    for (int g = node.gen; g >= 1; --g) {
        const auto& gen = tree.generations[static_cast<std::size_t>(g)];
        path[static_cast<std::size_t>(g - 1)] = gen.position[idx];
        idx = gen.parent[idx];
    }
    return path;
}

std::vector<double> ancestral_prefix_minima(const BrwTree& tree, NodeId node) {
    std::vector<double> path = ancestral_path(tree, node);
    double running = 0.0; // root position
    for (double& v : path) {
        running = std::min(running, v);
        v = running;
    }
    return path;
}

bool ci99_overlap(double a, double se_a, double b, double se_b) {
    const double z = 2.5758293035489004; // 99% two-sided normal quantile
    return a - z * se_a <= b + z * se_b && b - z * se_b <= a + z * se_a;
}

PairedEstimate many_to_one_expectation(const OffspringLaw& law, const PathFunctional& g, int n,
                                       long reps, rng::Stream& stream) {
    if (n < 1) throw ConfigInvalid("many_to_one_expectation: n must be at least 1");
    const double expected_nodes =
        std::pow(law.mean_count(), static_cast<double>(n)) * static_cast<double>(reps);
    if (expected_nodes > 2e9) throw BudgetExceeded("many_to_one_expectation: budget exceeded");
    const WalkLaw walk = associated_walk(law);

    num::Accumulator lhs;
    std::vector<double> path(static_cast<std::size_t>(n));
    for (long rep = 0; rep < reps; ++rep) {
        const BrwTree tree = grow_tree(law, n, kDefaultGenerationCap, stream);
        const auto& leaves = tree.generations[static_cast<std::size_t>(n)];
        double total = 0.0;
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            std::uint64_t idx = i;
            for (int lvl = n; lvl >= 1; --lvl) {
                const auto& gen = tree.generations[static_cast<std::size_t>(lvl)];
                path[static_cast<std::size_t>(lvl - 1)] = gen.position[idx];
                idx = gen.parent[idx];
            }
            total += g(path) * std::exp(-leaves.position[i]);
        }
        lhs.add(total);
    }

    num::Accumulator rhs;
    for (long rep = 0; rep < reps; ++rep) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            s += walk.sample(stream);
            path[static_cast<std::size_t>(k)] = s;
        }
        rhs.add(g(path));
    }
    return {lhs.mean(), lhs.se(), rhs.mean(), rhs.se()};
}

namespace {
constexpr char kTreeMagic[8] = {'C', 'B', 'R', 'W', '0', '0', '0', '1'};

template <typename T> void write_pod(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> void read_pod(std::ifstream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
} // namespace

void write_tree_binary(const BrwTree& tree, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("write_tree_binary: cannot open " + path);
    os.write(kTreeMagic, 8);
    write_pod(os, static_cast<std::int32_t>(tree.depth));
    write_pod(os, static_cast<std::int32_t>(tree.extinct ? tree.extinct_at : -1));
    for (const auto& gen : tree.generations) {
        write_pod(os, static_cast<std::uint64_t>(gen.size()));
        os.write(reinterpret_cast<const char*>(gen.parent.data()),
                 static_cast<std::streamsize>(gen.parent.size() * sizeof(std::uint32_t)));
        os.write(reinterpret_cast<const char*>(gen.displacement.data()),
                 static_cast<std::streamsize>(gen.displacement.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(gen.position.data()),
                 static_cast<std::streamsize>(gen.position.size() * sizeof(double)));
    }
    if (!os) throw Error("write_tree_binary: write failed for " + path);
}

BrwTree read_tree_binary(const std::string& path, const OffspringLaw& law) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("read_tree_binary: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kTreeMagic, 8) != 0)
        throw Error("read_tree_binary: bad magic in " + path);
    BrwTree tree;
    tree.law = law;
    std::int32_t depth = 0, extinct_at = -1;
    read_pod(is, depth);
    read_pod(is, extinct_at);
    tree.depth = depth;
    tree.extinct_at = extinct_at;
    tree.extinct = extinct_at >= 0;
    tree.generations.resize(static_cast<std::size_t>(depth) + 1);
    for (auto& gen : tree.generations) {
        std::uint64_t count = 0;
        read_pod(is, count);
        gen.parent.resize(count);
        gen.displacement.resize(count);
        gen.position.resize(count);
        is.read(reinterpret_cast<char*>(gen.parent.data()),
                static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
        is.read(reinterpret_cast<char*>(gen.displacement.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        is.read(reinterpret_cast<char*>(gen.position.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
    }
    if (!is) throw Error("read_tree_binary: truncated file " + path);
    return tree;
}

} // namespace cascade
