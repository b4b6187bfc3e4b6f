#include "rpkm/core.hpp"

#include <cmath>
#include <limits>

namespace rpkm {

Dataset::Dataset(std::size_t n_, std::size_t d_, std::vector<double> pts)
    : n(n_), d(d_), points(std::move(pts)) {
    if (points.size() != n * d)
        throw std::invalid_argument("Dataset: buffer size does not match n*d");
}

void Dataset::validate() const {
    if (n < 1 || d < 1)
        throw std::invalid_argument("Dataset: n and d must be at least 1");
    if (points.size() != n * d)
        throw std::invalid_argument("Dataset: buffer size does not match n*d");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i]))
            throw std::invalid_argument(
                "Dataset: non-finite coordinate at flat index " +
                std::to_string(i));
    }
}

CentroidSet::CentroidSet(std::size_t k_, std::size_t d_, std::vector<double> c)
    : k(k_), d(d_), centroids(std::move(c)) {
    if (centroids.size() != k * d)
        throw std::invalid_argument("CentroidSet: buffer size does not match k*d");
}

EmptyClusterError::EmptyClusterError(std::size_t cluster, const std::string& what)
    : std::runtime_error(what), cluster_(cluster) {}

double squared_distance(std::span<const double> a, std::span<const double> b,
                        DistanceCounter& counter) {
    if (a.size() != b.size())
        throw std::invalid_argument("squared_distance: dimension mismatch");
    counter.add(1);
    return detail::sq_dist(a.data(), b.data(), a.size());
}

double full_error(const Dataset& data, const CentroidSet& centroids,
                  DistanceCounter& counter) {
    if (data.n == 0)
        throw std::invalid_argument("full_error: empty dataset");
    if (data.d != centroids.d)
        throw std::invalid_argument("full_error: dimension mismatch");
    if (centroids.k == 0)
        throw std::invalid_argument("full_error: empty centroid set");

    double total = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* x = data.points.data() + i * data.d;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < centroids.k; ++j) {
            const double dist =
                detail::sq_dist(x, centroids.centroids.data() + j * data.d, data.d);
            if (dist < best) best = dist;
        }
        total += best;
    }
    counter.add(static_cast<std::uint64_t>(data.n) * centroids.k);
    return total;
}

std::pair<double, Assignment> centroid_error(const WeightedPoints& reps,
                                             const CentroidSet& centroids,
                                             DistanceCounter& counter) {
    if (reps.count == 0)
        throw std::invalid_argument("centroid_error: no representatives");
    if (reps.dim != centroids.d)
        throw std::invalid_argument("centroid_error: dimension mismatch");

    Assignment labels(reps.count);
    double total = 0.0;
    for (std::size_t i = 0; i < reps.count; ++i) {
        const double* m = reps.means.data() + i * reps.dim;
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < centroids.k; ++j) {
            const double dist =
                detail::sq_dist(m, centroids.centroids.data() + j * reps.dim, reps.dim);
            if (dist < best) {
                best = dist;
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        labels[i] = best_j;
        total += static_cast<double>(reps.weights[i]) * best;
    }
    counter.add(static_cast<std::uint64_t>(reps.count) * centroids.k);
    return {total, std::move(labels)};
}

Assignment induce_assignment(const WeightedPoints& reps,
                             const CentroidSet& centroids,
                             DistanceCounter& counter) {
    if (reps.count == 0)
        throw std::invalid_argument("induce_assignment: no representatives");
    if (reps.dim != centroids.d)
        throw std::invalid_argument("induce_assignment: dimension mismatch");

    Assignment labels(reps.count);
    for (std::size_t i = 0; i < reps.count; ++i) {
        const double* m = reps.means.data() + i * reps.dim;
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < centroids.k; ++j) {
            const double dist =
                detail::sq_dist(m, centroids.centroids.data() + j * reps.dim, reps.dim);
            if (dist < best) {
                best = dist;
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        labels[i] = best_j;
    }
    counter.add(static_cast<std::uint64_t>(reps.count) * centroids.k);
    return labels;
}

CentroidSet induce_centroids(const WeightedPoints& reps,
                             const Assignment& labels, std::size_t k) {
    if (labels.size() != reps.count)
        throw std::invalid_argument("induce_centroids: label count mismatch");
    if (k == 0)
        throw std::invalid_argument("induce_centroids: k must be positive");

    CentroidSet out(k, reps.dim);
    std::vector<double> cluster_weight(k, 0.0);
    for (std::size_t i = 0; i < reps.count; ++i) {
        const std::uint32_t lbl = labels[i];
        if (lbl >= k)
            throw std::invalid_argument("induce_centroids: label out of range");
        const double w = static_cast<double>(reps.weights[i]);
        const double* m = reps.means.data() + i * reps.dim;
        double* c = out.centroids.data() + lbl * reps.dim;
        for (std::size_t j = 0; j < reps.dim; ++j) c[j] += w * m[j];
        cluster_weight[lbl] += w;
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (cluster_weight[j] == 0.0)
            throw EmptyClusterError(
                j, "induce_centroids: cluster " + std::to_string(j) + " is empty");
        double* c = out.centroids.data() + j * reps.dim;
        for (std::size_t t = 0; t < reps.dim; ++t) c[t] /= cluster_weight[j];
    }
    return out;
}

}  // namespace rpkm
