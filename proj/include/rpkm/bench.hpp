#ifndef RPKM_BENCH_HPP
#define RPKM_BENCH_HPP

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpkm/baselines.hpp"
#include "rpkm/data_io.hpp"
#include "rpkm/lloyd.hpp"
#include "rpkm/rpkm.hpp"

namespace rpkm {

struct ExperimentConfig {
    std::vector<std::string> algorithms = {"rpkm", "kmpp", "mb"};
    std::vector<std::size_t> n_list;
    std::vector<std::size_t> d_list;
    std::vector<std::uint32_t> k_list;
    std::uint32_t m = 6;
    std::vector<std::size_t> b_list = {100, 500, 1000};  // minibatch sizes
    std::uint32_t mb_batches = 100;                      // t
    std::uint32_t replicates = 10;
    std::uint64_t seed = 0;
    bool evaluation = false;  // full-data error and std.error per step
    std::optional<std::string> csv_path;  // subsample a CSV instead of mixtures
    double sigma = 1.0;
    double separation_sigmas = 4.0;
    double box_side_sigmas = 20.0;
    WLParams wl;
    double displacement_threshold = 0.0;
    std::uint32_t jobs = 1;
    bool timing = false;  // emit wall_time_ms (breaks byte-identical reruns)

    void validate() const;  // throws std::invalid_argument
};

/// Stable seed derivation: a pure function of the base seed and the index
/// path, independent of execution order.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path);

/// Runs the full sweep: for every (n, d, K, replicate) the configured
/// algorithms share one dataset and own separate counters and rng streams.
/// Failures are recorded per record (error field) and the sweep continues.
/// Records come back in deterministic sweep order regardless of `jobs`.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

bool any_failed(const std::vector<RunRecord>& records);

struct SummaryTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> warnings;

    std::string to_csv() const;
};

/// Medians and quartiles of distance counts and std.error, grouped by any of
/// {algorithm, n, d, K, level, b}. RPKM records contribute one row per step;
/// the other algorithms one row each.
SummaryTable summarize(const std::vector<RunRecord>& records,
                       std::span<const std::string> group_by);

}  // namespace rpkm

#endif  // RPKM_BENCH_HPP
