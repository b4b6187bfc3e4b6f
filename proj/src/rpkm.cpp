#include "rpkm/rpkm.hpp"

#include <algorithm>

namespace rpkm {

CentroidSet forgy_init(const WeightedPoints& reps, std::uint32_t k,
                       std::mt19937_64& rng) {
    if (k == 0)
        throw std::invalid_argument("forgy_init: k must be positive");
    if (reps.count < k)
        throw std::invalid_argument("forgy_init: fewer representatives than k");

    // Partial Fisher-Yates over the representative indices.
    std::vector<std::size_t> idx(reps.count);
    for (std::size_t i = 0; i < reps.count; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, reps.count - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }

    CentroidSet out(k, reps.dim);
    for (std::size_t j = 0; j < k; ++j) {
        const auto m = reps.mean(idx[j]);
        std::copy(m.begin(), m.end(), out.centroids.data() + j * reps.dim);
    }
    return out;
}

double displacement(const CentroidSet& prev, const CentroidSet& cur) {
    if (prev.k != cur.k || prev.d != cur.d)
        throw std::invalid_argument("displacement: shape mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < prev.k; ++j) {
        const double dist = detail::sq_dist(prev.centroids.data() + j * prev.d,
                                            cur.centroids.data() + j * prev.d,
                                            prev.d);
        if (dist > worst) worst = dist;
    }
    return worst;
}

RPKMResult run_rpkm(const Dataset& data, const RPKMParams& params) {
    if (params.k == 0)
        throw std::invalid_argument("run_rpkm: k must be positive");
    if (params.m == 0)
        throw std::invalid_argument("run_rpkm: m must be >= 1");
    if (data.n < params.k)
        throw std::invalid_argument("run_rpkm: fewer points than clusters");

    PartitionSequence seq = build_sequence(data, params.m);
    std::mt19937_64 rng(params.seed);
    DistanceCounter counter;
    DistanceCounter eval_counter;

    RPKMResult res;
    WLParams wl = params.wl;
    wl.record_history = params.record_history;

    CentroidSet current;
    bool started = false;
    for (std::uint32_t lv = 1; lv <= params.m; ++lv) {
        const PartitionLevel& level = seq.level(lv);
        if (level.cells() < params.k) continue;  // too coarse for K clusters
        if (!started) {
            res.start_level = lv;
            current = forgy_init(level.reps(), params.k, rng);
            started = true;
        }

        WLResult wl_res = weighted_lloyd(level.reps(), current, wl, counter);

        RPKMStep step;
        step.level = lv;
        step.cells = level.cells();
        step.wl_iterations = wl_res.iterations;
        step.centroid_error = wl_res.error_trace.back();
        step.dist_evals = counter.count;
        step.delta = displacement(current, wl_res.centroids);
        step.centroids = wl_res.centroids;

        if (params.evaluate) {
            // One full-data Lloyd run yields both the error of this step's
            // centroids (front of the trace) and the converged reference
            // error; their relative gap is the std.error.
            const WLResult eval = lloyd(data, wl_res.centroids, params.wl, eval_counter);
            const double e_m = eval.error_trace.front();
            const double e_star = eval.error_trace.back();
            step.full_error = e_m;
            if (e_star == 0.0) {
                if (e_m != 0.0)
                    throw DegenerateZeroError(
                        "run_rpkm: reference error is zero but step error is not");
                step.std_err = 0.0;
            } else {
                step.std_err = (e_star - e_m) / e_star;
            }
        }
        if (params.record_history) res.histories.push_back(std::move(wl_res.history));

        current = std::move(wl_res.centroids);
        const double delta = step.delta;
        res.steps.push_back(std::move(step));
        if (params.displacement_threshold > 0.0 &&
            delta < params.displacement_threshold)
            break;
    }

    if (!started)
        throw InfeasibleError("run_rpkm: every level has fewer cells than K");

    res.centroids = std::move(current);
    res.dist_evals = counter.count;
    res.eval_dist_evals = eval_counter.count;
    if (params.record_history) res.sequence = std::move(seq);
    return res;
}

}  // namespace rpkm
