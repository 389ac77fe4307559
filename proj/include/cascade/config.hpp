#pragma once

// Sectioned key = value experiment configuration. Unknown sections or keys
// are rejected; parse -> serialize -> parse is the identity.

#include "cascade/offspring.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

struct ModelConfig {
    std::string kind = "lattice"; // lattice | gaussian | atoms | gaussian-template
    std::optional<std::string> atoms; // "value:prob, value:prob"
    std::optional<std::string> count; // "2" or "0:0.25, 2:0.75"
    std::optional<bool> normalize;
    std::optional<double> mean;
    std::optional<double> variance;
};

struct ExperimentSection {
    std::string kind = "tree-martingales";
    std::optional<long> depth;
    std::optional<long> replicas;
    std::optional<long> side_depth;
    std::optional<long> tail_window;
    std::optional<long> n0;
    std::optional<long> horizon;
    std::optional<long> budget;
    std::optional<double> alpha;
    std::optional<double> u_max;
    std::optional<double> grid;
    std::optional<double> x;
    std::optional<double> delta;
    std::optional<std::string> betas; // "0.5, 1, 2"
    std::optional<std::string> ns;    // "64, 256, 1024"
    std::optional<std::string> method;
    std::optional<std::string> psi; // e.g. "psi1", "psi2", "psi1e1.0"
    std::optional<std::uint64_t> cap;
    std::optional<std::uint64_t> side_cap;
    std::optional<bool> retain_trees;
    std::optional<long> plot_stride;
};

struct RunSection {
    std::uint64_t seed = 1;
    int workers = 0; // 0: hardware concurrency
    std::string out = "out";
};

struct ExperimentConfig {
    ModelConfig model;
    ExperimentSection experiment;
    RunSection run;

    static ExperimentConfig parse(std::string_view text);
    static ExperimentConfig parse_file(const std::string& path);
    std::string serialize() const;
    std::uint64_t config_hash() const;

    OffspringLaw build_law() const;
    void validate() const;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<long> parse_long_list(const std::string& text);

} // namespace cascade
