#pragma once

// Deterministic parallel experiment execution. Replicas map to streams by
// (seed, replica, purpose) only, work is scheduled in fixed batches, and all
// reductions and output writes happen in replica-index order, so results are
// identical for any worker count.

#include "cascade/config.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cascade {

struct OutputFile {
    std::string path;
    std::uint64_t bytes = 0;
    std::string fnv64;
};

struct RunManifest {
    std::string config_hash;
    std::string code_version;
    std::string started_at;
    std::string finished_at;
    std::uint64_t master_seed = 0;
    int workers = 0;
    long replicas = 0;
    std::vector<std::pair<std::string, std::uint32_t>> purposes;
    std::vector<OutputFile> outputs;
    bool complete = false;
    std::string error;

    std::string to_json() const;
};

extern const char* kCodeVersion;

int effective_workers(int requested);

// Runs fn(batch, begin, end) over [0, n_items) split into fixed batches.
// Batch boundaries depend only on n_items and batch_size.
void run_parallel_batches(long n_items, long batch_size, int workers,
                          const std::function<void(long, long, long)>& fn);

// Writes content, records (path, size, checksum) into the manifest.
void write_output(RunManifest& manifest, const std::string& dir, const std::string& name,
                  const std::string& content);

RunManifest run_experiment(const ExperimentConfig& config);

std::string format_double(double v);

} // namespace cascade
