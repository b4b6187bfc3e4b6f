#ifndef RPKM_LLOYD_HPP
#define RPKM_LLOYD_HPP

#include <cstdint>
#include <vector>

#include "rpkm/core.hpp"

namespace rpkm {

struct WLParams {
    double rel_tolerance = 1e-9;        // relative centroid-error decrease threshold
    std::uint32_t max_iterations = 1000;
    bool record_history = false;        // keep every clustering G_0..G_l
};

/// Outcome of one (weighted) Lloyd run.
///
/// error_trace alternates centroid and clustering errors along the run,
/// [E(C_0), E(G_0), E(C_1), E(G_1), ..., E(C_l)], and is non-increasing.
struct WLResult {
    CentroidSet centroids;
    Assignment assignment;
    std::uint32_t iterations = 0;       // l >= 1
    std::vector<double> error_trace;    // length 2l + 1
    std::uint64_t distance_evals = 0;   // booked by this run
    std::uint32_t repair_passes = 0;
    std::vector<Assignment> history;    // G_0..G_l when record_history
};

struct RepairResult {
    Assignment labels;
    CentroidSet centroids;
    double centroid_err = 0.0;  // after reassignment
    bool resolved = false;      // no empty clusters remain
};

/// Lloyd iterations over a set of representatives and weights: alternate
/// nearest-centroid assignment and weighted center-of-mass updates, recording
/// both errors each round. Stops when the centroid error stops decreasing
/// relative to rel_tolerance, when the assignment repeats, or at
/// max_iterations. Each assignment step books |reps|*K evaluations; empty
/// clusters are repaired internally and never surface.
WLResult weighted_lloyd(const WeightedPoints& reps, const CentroidSet& init,
                        const WLParams& params, DistanceCounter& counter);

/// Single re-seeding pass: each empty cluster's centroid moves to the
/// unclaimed representative with the largest weighted error contribution
/// |S|*dist(mean, assigned centroid), then the assignment is recomputed.
/// Books |reps| + |reps|*K evaluations (identity, with none booked, when no
/// cluster is empty). Throws UnresolvableEmptyClusterError when |reps| < K.
RepairResult repair_empty_clusters(const Assignment& labels,
                                   const WeightedPoints& reps,
                                   const CentroidSet& centroids,
                                   DistanceCounter& counter);

/// Standard Lloyd over raw instances. Behaves exactly like weighted_lloyd on
/// the singleton partition (all weights 1); kept as an independent route so
/// the two implementations can cross-check each other. Books n*K evaluations
/// per assignment step.
WLResult lloyd(const Dataset& data, const CentroidSet& init,
               const WLParams& params, DistanceCounter& counter);

/// Relative gap (E* - E)/E* where E is the full-dataset error of `centroids`
/// and E* the error after running full-data Lloyd seeded from them. Always
/// <= 0 up to rounding. All distance work is booked to `eval_counter`, which
/// callers keep separate from algorithm counters. Throws DegenerateZeroError
/// when E* = 0 but E > 0.
double std_error(const Dataset& data, const CentroidSet& centroids,
                 const WLParams& params, DistanceCounter& eval_counter);

}  // namespace rpkm

#endif  // RPKM_LLOYD_HPP
