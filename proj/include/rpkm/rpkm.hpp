#ifndef RPKM_RPKM_HPP
#define RPKM_RPKM_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "rpkm/core.hpp"
#include "rpkm/grid.hpp"
#include "rpkm/lloyd.hpp"

namespace rpkm {

struct RPKMParams {
    std::uint32_t k = 0;
    std::uint32_t m = 6;                  // max partition depth
    double displacement_threshold = 0.0;  // 0 disables the early stop
    WLParams wl;
    std::uint64_t seed = 0;
    bool evaluate = false;        // full-data error and std.error per step
    bool record_history = false;  // keep partitions + per-step clusterings
};

struct RPKMStep {
    std::uint32_t level = 0;
    std::size_t cells = 0;           // |P_i|
    std::uint32_t wl_iterations = 0; // l_i
    double centroid_error = 0.0;     // E_{P_i}(C_i), end of the step
    std::uint64_t dist_evals = 0;    // cumulative algorithm evaluations
    double delta = 0.0;              // displacement from the previous step
    CentroidSet centroids;           // C_i
    std::optional<double> full_error;  // E(C_i), evaluation mode only
    std::optional<double> std_err;     // rho at this step, evaluation mode only
};

struct RPKMResult {
    CentroidSet centroids;
    std::vector<RPKMStep> steps;      // executed levels, in order
    std::uint32_t start_level = 0;    // first level with |P_i| >= K
    std::uint64_t dist_evals = 0;     // algorithm total
    std::uint64_t eval_dist_evals = 0;
    // Populated in record_history mode:
    std::optional<PartitionSequence> sequence;
    std::vector<std::vector<Assignment>> histories;  // per step: G_0..G_l
};

/// K distinct representatives drawn uniformly without replacement.
CentroidSet forgy_init(const WeightedPoints& reps, std::uint32_t k,
                       std::mt19937_64& rng);

/// Largest squared movement over index-matched centroid pairs. The value is
/// order-sensitive by construction: it compares centroid j with centroid j.
double displacement(const CentroidSet& prev, const CentroidSet& cur);

/// The full driver: builds grid levels 1..m, runs weighted Lloyd per level
/// seeding each level with the previous level's output (Forgy at the first
/// level holding at least K representatives; levels below that are skipped),
/// and stops early when the displacement drops under the threshold.
RPKMResult run_rpkm(const Dataset& data, const RPKMParams& params);

}  // namespace rpkm

#endif  // RPKM_RPKM_HPP
