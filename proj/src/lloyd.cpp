#include "rpkm/lloyd.hpp"

#include <algorithm>
#include <limits>

namespace rpkm {

namespace {

constexpr double kErrorFloor = 1e-300;

bool has_empty_cluster(const Assignment& labels, std::size_t k) {
    std::vector<char> seen(k, 0);
    for (const auto lbl : labels) seen[lbl] = 1;
    return std::find(seen.begin(), seen.end(), 0) != seen.end();
}

// One fused assignment pass over weighted representatives: argmin labels,
// the centroid error sum w*min_dist, and (when prev_labels is given) the
// clustering error of the previous assignment against these centroids.
// Books reps.count * k evaluations.
struct AssignOutcome {
    Assignment labels;
    double centroid_err = 0.0;
    double prev_label_err = 0.0;
};

AssignOutcome assign_weighted(const WeightedPoints& reps, const CentroidSet& c,
                              const Assignment* prev_labels,
                              DistanceCounter& counter) {
    AssignOutcome out;
    out.labels.resize(reps.count);
    for (std::size_t i = 0; i < reps.count; ++i) {
        const double* m = reps.means.data() + i * reps.dim;
        const double w = static_cast<double>(reps.weights[i]);
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < c.k; ++j) {
            const double dist =
                detail::sq_dist(m, c.centroids.data() + j * reps.dim, reps.dim);
            if (dist < best) {
                best = dist;
                best_j = static_cast<std::uint32_t>(j);
            }
            if (prev_labels && (*prev_labels)[i] == j)
                out.prev_label_err += w * dist;
        }
        out.labels[i] = best_j;
        out.centroid_err += w * best;
    }
    counter.add(static_cast<std::uint64_t>(reps.count) * c.k);
    return out;
}

// Center-of-mass update that keeps the previous centroid for clusters with
// no members. Empty clusters can reach this point only after a re-seeding
// pass stalled on duplicate data.
CentroidSet update_weighted(const WeightedPoints& reps, const Assignment& labels,
                            const CentroidSet& prev) {
    CentroidSet out(prev.k, prev.d);
    std::vector<double> cluster_weight(prev.k, 0.0);
    for (std::size_t i = 0; i < reps.count; ++i) {
        const double w = static_cast<double>(reps.weights[i]);
        const double* m = reps.means.data() + i * reps.dim;
        double* c = out.centroids.data() + labels[i] * reps.dim;
        for (std::size_t j = 0; j < reps.dim; ++j) c[j] += w * m[j];
        cluster_weight[labels[i]] += w;
    }
    for (std::size_t j = 0; j < prev.k; ++j) {
        double* c = out.centroids.data() + j * prev.d;
        if (cluster_weight[j] == 0.0) {
            const double* keep = prev.centroids.data() + j * prev.d;
            std::copy(keep, keep + prev.d, c);
        } else {
            for (std::size_t t = 0; t < prev.d; ++t) c[t] /= cluster_weight[j];
        }
    }
    return out;
}

// Runs re-seeding passes until every cluster is filled or a pass makes no
// progress (possible only when the data has fewer distinct locations than
// clusters). Returns the number of passes.
std::uint32_t repair_until_stable(Assignment& labels, CentroidSet& centroids,
                                  double& centroid_err, const WeightedPoints& reps,
                                  DistanceCounter& counter) {
    std::uint32_t passes = 0;
    while (has_empty_cluster(labels, centroids.k)) {
        RepairResult rep = repair_empty_clusters(labels, reps, centroids, counter);
        ++passes;
        const bool progressed =
            rep.labels != labels || rep.centroids.centroids != centroids.centroids;
        labels = std::move(rep.labels);
        centroids = std::move(rep.centroids);
        centroid_err = rep.centroid_err;
        if (rep.resolved || !progressed || passes > centroids.k) break;
    }
    return passes;
}

}  // namespace

RepairResult repair_empty_clusters(const Assignment& labels,
                                   const WeightedPoints& reps,
                                   const CentroidSet& centroids,
                                   DistanceCounter& counter) {
    if (labels.size() != reps.count)
        throw std::invalid_argument("repair_empty_clusters: label count mismatch");

    std::vector<std::uint64_t> members(centroids.k, 0);
    for (const auto lbl : labels) {
        if (lbl >= centroids.k)
            throw std::invalid_argument("repair_empty_clusters: label out of range");
        ++members[lbl];
    }
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < centroids.k; ++j)
        if (members[j] == 0) empty.push_back(j);
    if (empty.empty())
        return {labels, centroids, 0.0, true};
    if (reps.count < centroids.k)
        throw UnresolvableEmptyClusterError(
            "repair_empty_clusters: fewer representatives than clusters");

    // Weighted error contribution of each representative against its
    // currently assigned centroid.
    std::vector<double> contribution(reps.count);
    for (std::size_t i = 0; i < reps.count; ++i) {
        const double* m = reps.means.data() + i * reps.dim;
        const double* c = centroids.centroids.data() + labels[i] * reps.dim;
        contribution[i] =
            static_cast<double>(reps.weights[i]) * detail::sq_dist(m, c, reps.dim);
    }
    counter.add(reps.count);

    RepairResult out;
    out.centroids = centroids;
    std::vector<char> claimed(reps.count, 0);
    for (const std::size_t j : empty) {
        std::size_t pick = reps.count;
        double best = -1.0;
        for (std::size_t i = 0; i < reps.count; ++i) {
            if (claimed[i]) continue;
            if (contribution[i] > best) {
                best = contribution[i];
                pick = i;
            }
        }
        claimed[pick] = 1;
        const double* m = reps.means.data() + pick * reps.dim;
        std::copy(m, m + reps.dim, out.centroids.centroids.data() + j * reps.dim);
    }

    AssignOutcome re = assign_weighted(reps, out.centroids, nullptr, counter);
    out.labels = std::move(re.labels);
    out.centroid_err = re.centroid_err;
    out.resolved = !has_empty_cluster(out.labels, out.centroids.k);
    return out;
}

WLResult weighted_lloyd(const WeightedPoints& reps, const CentroidSet& init,
                        const WLParams& params, DistanceCounter& counter) {
    if (reps.count == 0)
        throw std::invalid_argument("weighted_lloyd: no representatives");
    if (reps.dim != init.d)
        throw std::invalid_argument("weighted_lloyd: dimension mismatch");
    if (init.k == 0)
        throw std::invalid_argument("weighted_lloyd: empty initial centroid set");
    if (params.max_iterations == 0)
        throw std::invalid_argument("weighted_lloyd: max_iterations must be >= 1");
    for (std::size_t i = 0; i < reps.count; ++i)
        if (reps.weights[i] == 0)
            throw std::invalid_argument("weighted_lloyd: weights must be positive");

    const std::uint64_t evals_before = counter.count;
    WLResult res;
    CentroidSet centroids = init;

    // Step 0: initial assignment.
    AssignOutcome step0 = assign_weighted(reps, centroids, nullptr, counter);
    Assignment labels = std::move(step0.labels);
    double centroid_err = step0.centroid_err;
    if (has_empty_cluster(labels, centroids.k))
        res.repair_passes +=
            repair_until_stable(labels, centroids, centroid_err, reps, counter);

    res.error_trace.push_back(centroid_err);
    if (params.record_history) res.history.push_back(labels);

    double prev_err = centroid_err;
    std::uint32_t l = 0;
    while (true) {
        ++l;
        CentroidSet updated = update_weighted(reps, labels, centroids);
        AssignOutcome step = assign_weighted(reps, updated, &labels, counter);
        double err = step.centroid_err;
        Assignment new_labels = std::move(step.labels);
        if (has_empty_cluster(new_labels, updated.k))
            res.repair_passes +=
                repair_until_stable(new_labels, updated, err, reps, counter);

        res.error_trace.push_back(step.prev_label_err);
        res.error_trace.push_back(err);
        if (params.record_history) res.history.push_back(new_labels);

        const bool unchanged = new_labels == labels;
        const bool converged =
            prev_err - err <= params.rel_tolerance * std::max(prev_err, kErrorFloor);
        labels = std::move(new_labels);
        centroids = std::move(updated);
        prev_err = err;
        if (unchanged || converged || l >= params.max_iterations) break;
    }

    res.centroids = std::move(centroids);
    res.assignment = std::move(labels);
    res.iterations = l;
    res.distance_evals = counter.count - evals_before;
    return res;
}

WLResult lloyd(const Dataset& data, const CentroidSet& init,
               const WLParams& params, DistanceCounter& counter) {
    if (data.n == 0)
        throw std::invalid_argument("lloyd: empty dataset");
    if (data.d != init.d)
        throw std::invalid_argument("lloyd: dimension mismatch");
    if (init.k == 0)
        throw std::invalid_argument("lloyd: empty initial centroid set");
    if (params.max_iterations == 0)
        throw std::invalid_argument("lloyd: max_iterations must be >= 1");

    const std::size_t n = data.n;
    const std::size_t d = data.d;
    const std::size_t k = init.k;
    const std::uint64_t evals_before = counter.count;

    // Structurally the same alternation as weighted_lloyd, written over raw
    // instances. Keep the two in sync; tests assert exact trace equality.
    auto assign = [&](const CentroidSet& c, const Assignment* prev, double* prev_err_out,
                      Assignment& out_labels) -> double {
        double total = 0.0;
        double prev_total = 0.0;
        out_labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = data.points.data() + i * d;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_j = 0;
            for (std::size_t j = 0; j < k; ++j) {
                const double dist = detail::sq_dist(x, c.centroids.data() + j * d, d);
                if (dist < best) {
                    best = dist;
                    best_j = static_cast<std::uint32_t>(j);
                }
                if (prev && (*prev)[i] == j) prev_total += dist;
            }
            out_labels[i] = best_j;
            total += best;
        }
        counter.add(static_cast<std::uint64_t>(n) * k);
        if (prev_err_out) *prev_err_out = prev_total;
        return total;
    };

    auto update = [&](const Assignment& labels, const CentroidSet& prev) {
        CentroidSet out(k, d);
        std::vector<double> size(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = data.points.data() + i * d;
            double* c = out.centroids.data() + labels[i] * d;
            for (std::size_t j = 0; j < d; ++j) c[j] += x[j];
            size[labels[i]] += 1.0;
        }
        for (std::size_t j = 0; j < k; ++j) {
            double* c = out.centroids.data() + j * d;
            if (size[j] == 0.0) {
                const double* keep = prev.centroids.data() + j * d;
                std::copy(keep, keep + d, c);
            } else {
                for (std::size_t t = 0; t < d; ++t) c[t] /= size[j];
            }
        }
        return out;
    };

    auto repair = [&](Assignment& labels, CentroidSet& c, double& err) -> std::uint32_t {
        std::uint32_t passes = 0;
        while (has_empty_cluster(labels, k)) {
            if (n < k)
                throw UnresolvableEmptyClusterError(
                    "lloyd: fewer points than clusters");
            std::vector<double> contribution(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double* x = data.points.data() + i * d;
                contribution[i] =
                    detail::sq_dist(x, c.centroids.data() + labels[i] * d, d);
            }
            counter.add(n);
            std::vector<char> seen(k, 0);
            for (const auto lbl : labels) seen[lbl] = 1;
            CentroidSet reseeded = c;
            std::vector<char> claimed(n, 0);
            for (std::size_t j = 0; j < k; ++j) {
                if (seen[j]) continue;
                std::size_t pick = n;
                double best = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (claimed[i]) continue;
                    if (contribution[i] > best) {
                        best = contribution[i];
                        pick = i;
                    }
                }
                claimed[pick] = 1;
                const double* x = data.points.data() + pick * d;
                std::copy(x, x + d, reseeded.centroids.data() + j * d);
            }
            Assignment new_labels;
            const double new_err = assign(reseeded, nullptr, nullptr, new_labels);
            ++passes;
            const bool progressed =
                new_labels != labels || reseeded.centroids != c.centroids;
            labels = std::move(new_labels);
            c = std::move(reseeded);
            err = new_err;
            if (!has_empty_cluster(labels, k)) break;
            if (!progressed || passes > k) break;
        }
        return passes;
    };

    WLResult res;
    CentroidSet centroids = init;
    Assignment labels;
    double centroid_err = assign(centroids, nullptr, nullptr, labels);
    if (has_empty_cluster(labels, k))
        res.repair_passes += repair(labels, centroids, centroid_err);

    res.error_trace.push_back(centroid_err);
    if (params.record_history) res.history.push_back(labels);

    double prev_err = centroid_err;
    std::uint32_t l = 0;
    while (true) {
        ++l;
        CentroidSet updated = update(labels, centroids);
        Assignment new_labels;
        double prev_label_err = 0.0;
        double err = assign(updated, &labels, &prev_label_err, new_labels);
        if (has_empty_cluster(new_labels, k))
            res.repair_passes += repair(new_labels, updated, err);

        res.error_trace.push_back(prev_label_err);
        res.error_trace.push_back(err);
        if (params.record_history) res.history.push_back(new_labels);

        const bool unchanged = new_labels == labels;
        const bool converged =
            prev_err - err <= params.rel_tolerance * std::max(prev_err, kErrorFloor);
        labels = std::move(new_labels);
        centroids = std::move(updated);
        prev_err = err;
        if (unchanged || converged || l >= params.max_iterations) break;
    }

    res.centroids = std::move(centroids);
    res.assignment = std::move(labels);
    res.iterations = l;
    res.distance_evals = counter.count - evals_before;
    return res;
}

double std_error(const Dataset& data, const CentroidSet& centroids,
                 const WLParams& params, DistanceCounter& eval_counter) {
    const WLResult res = lloyd(data, centroids, params, eval_counter);
    const double e_m = res.error_trace.front();
    const double e_star = res.error_trace.back();
    if (e_star == 0.0) {
        if (e_m == 0.0) return 0.0;
        throw DegenerateZeroError(
            "std_error: reference error is zero but candidate error is not");
    }
    return (e_star - e_m) / e_star;
}

}  // namespace rpkm
