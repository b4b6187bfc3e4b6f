#ifndef RPKM_THEORY_HPP
#define RPKM_THEORY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "rpkm/core.hpp"
#include "rpkm/grid.hpp"
#include "rpkm/rpkm.hpp"

namespace rpkm {

using BigInt = boost::multiprecision::cpp_int;

/// A partition of a dataset given as groups of point indices.
using IndexPartition = std::vector<std::vector<std::size_t>>;

/// Canonical form of a label vector: labels renumbered by first occurrence,
/// so any two assignments inducing the same partition compare equal.
using ClusteringKey = std::vector<std::uint32_t>;

ClusteringKey canonical_key(const Assignment& labels);

/// Inherits an assignment over the cells of a coarse level down to the cells
/// of a finer level of the same sequence.
Assignment lift_assignment(const PartitionSequence& seq, std::uint32_t from_level,
                           const Assignment& labels, std::uint32_t to_level);

/// Rep index of each point's cell at the given level.
std::vector<std::size_t> point_cells(const Dataset& data,
                                     const PartitionSequence& seq,
                                     std::uint32_t level);

// -- Lemma oracles ------------------------------------------------------

/// f(c) = |D| * dist(mean(D), c) - sum_R |R| * dist(mean(R), c); constant in
/// c for any partition of D.
double lemma1_f(const Dataset& data, const IndexPartition& partition,
                std::span<const double> c);

/// |f(c) - f(c')| — zero up to rounding.
double lemma1_residual(const Dataset& data, const IndexPartition& partition,
                       std::span<const double> c, std::span<const double> c_prime);

/// Weighted error of each group's representative against the center of mass
/// of its cluster (the clustering error of `labels` seen through partition
/// `p`). Labels index clusters in [0, k).
double clustering_error(const Dataset& data, const IndexPartition& p,
                        const Assignment& labels, std::uint32_t k);

/// |(E_P(G) - E_P(G')) - (E_P'(G) - E_P'(G'))| for a partition and a thinner
/// refinement of it; zero up to rounding. `g` and `g_prime` label the groups
/// of `p`; they must not split any group. Throws std::invalid_argument when
/// `p_thinner` does not refine `p` or the labels are malformed.
double lemma2_residual(const Dataset& data, const IndexPartition& p,
                       const IndexPartition& p_thinner, const Assignment& g,
                       const Assignment& g_prime, std::uint32_t k);

// -- Descent condition (Corollary 1) -------------------------------------

struct Corollary1Check {
    std::uint32_t level = 0;  // the step checked, against its predecessor
    double xi = 0.0;
    double lhs = 0.0;               // E(G_prev_penult) - E(C_prev)
    double rhs = 0.0;               // xi + E(G_cur_penult) - E(C_cur)
    double err_prev = 0.0;          // E(C_prev) on the full dataset
    double err_cur = 0.0;           // E(C_cur)
    bool condition_holds = false;   // lhs <= rhs
    bool descent = false;           // err_cur <= err_prev
    bool consistent = false;        // the two differences agree numerically
};

/// Evaluates the monotone-descent condition at every step of a run executed
/// with record_history; distance work goes to `eval_counter`.
std::vector<Corollary1Check> check_corollary1(const Dataset& data,
                                              const RPKMResult& run,
                                              DistanceCounter& eval_counter,
                                              double rel_tol = 1e-9);

// -- Clustering repetition bookkeeping -----------------------------------

struct WLHistory {
    struct Step {
        std::uint32_t level = 0;
        std::uint32_t iterations = 0;     // l_i
        std::vector<ClusteringKey> keys;  // G_0..G_l, lifted to the finest level
    };
    std::vector<Step> steps;
};

/// Lifts every recorded clustering of a record_history run onto the finest
/// grid level and canonicalizes it, so clusterings from different steps are
/// comparable as partitions of the dataset.
WLHistory build_history(const RPKMResult& run);

struct RepeatFinding {
    std::size_t step_i = 0, index_r = 0;
    std::size_t step_j = 0, index_s = 0;  // step_j == step_i within a step
    bool violation = false;
    std::string note;
};

struct RepeatReport {
    std::vector<RepeatFinding> findings;
    std::size_t violations = 0;
};

/// Finds repeated clusterings. A cross-step repeat of an interior clustering
/// (neither the seeding nor the final one of its run) is a violation unless
/// every step after the earlier occurrence ran a single iteration and the
/// earlier occurrence was the penultimate clustering of its step. Within a
/// step, only a trailing fixed-point plateau may repeat.
RepeatReport detect_clustering_repeats(const WLHistory& history);

/// One finding per entry: step indices, clustering indices, verdict.
nlohmann::ordered_json report_to_json(const RepeatReport& report);

// -- Iteration bound ------------------------------------------------------

/// Number of partitions of n items into k nonempty groups, exact.
BigInt stirling2(std::uint64_t n, std::uint64_t k);

/// Upper bound on the iteration count of the next step: S(|P_i|, K) minus
/// sum_{j<i}(l_j - 1), where i = |l_history| + 1 and partition_sizes holds
/// |P_1|..|P_i| (or more).
BigInt wl_iteration_bound(std::span<const std::size_t> partition_sizes,
                          std::span<const std::uint32_t> l_history,
                          std::uint32_t k);

struct IterationBoundCheck {
    std::uint32_t level = 0;
    std::uint32_t observed = 0;  // l_i
    bool bounded = false;        // bound was computed (cells <= max_cells)
    BigInt bound;
    bool ok = true;              // observed <= bound, or not bounded
};

/// Applies the bound to every executed step of a run. Steps whose cell count
/// exceeds max_cells are reported unbounded (ok by default) to keep the
/// Stirling numbers cheap.
std::vector<IterationBoundCheck> check_iteration_bounds(const RPKMResult& run,
                                                        std::size_t max_cells = 256);

}  // namespace rpkm

#endif  // RPKM_THEORY_HPP
