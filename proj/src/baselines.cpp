#include "rpkm/baselines.hpp"

#include <algorithm>
#include <limits>

namespace rpkm {

CentroidSet kmeanspp_init(const Dataset& data, std::uint32_t k,
                          std::mt19937_64& rng, DistanceCounter& counter) {
    if (k == 0)
        throw std::invalid_argument("kmeanspp_init: k must be positive");
    if (data.n < k)
        throw std::invalid_argument("kmeanspp_init: fewer points than clusters");

    const std::size_t n = data.n;
    const std::size_t d = data.d;
    CentroidSet out(k, d);
    std::vector<char> selected(n, 0);

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t chosen = first(rng);
    selected[chosen] = 1;
    std::copy(data.points.data() + chosen * d, data.points.data() + (chosen + 1) * d,
              out.centroids.data());

    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    for (std::size_t round = 1; round < k; ++round) {
        // Fold the newest center into the running minimum distances.
        const double* c = out.centroids.data() + (round - 1) * d;
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dist = detail::sq_dist(data.points.data() + i * d, c, d);
            if (dist < min_dist[i]) min_dist[i] = dist;
            mass += min_dist[i];
        }
        counter.add(n);

        if (mass > 0.0) {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double target = unit(rng) * mass;
            double cum = 0.0;
            chosen = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (min_dist[i] <= 0.0) continue;  // zero-mass points never win
                cum += min_dist[i];
                if (cum > target) {
                    chosen = i;
                    break;
                }
            }
            if (chosen == n) {
                // Rounding pushed the target past the cumulative total; take
                // the last point with positive mass.
                for (std::size_t i = n; i-- > 0;) {
                    if (min_dist[i] > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            }
        } else {
            // All remaining mass is zero: every point duplicates a chosen
            // center. Fall back to a uniform draw over unselected points.
            std::vector<std::size_t> remaining;
            for (std::size_t i = 0; i < n; ++i)
                if (!selected[i]) remaining.push_back(i);
            std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
            chosen = remaining[pick(rng)];
        }
        selected[chosen] = 1;
        min_dist[chosen] = 0.0;
        std::copy(data.points.data() + chosen * d,
                  data.points.data() + (chosen + 1) * d,
                  out.centroids.data() + round * d);
    }
    return out;
}

CentroidSet minibatch_kmeans(const Dataset& data, const CentroidSet& init,
                             const MBParams& params, DistanceCounter& counter) {
    if (data.n == 0)
        throw std::invalid_argument("minibatch_kmeans: empty dataset");
    if (data.d != init.d)
        throw std::invalid_argument("minibatch_kmeans: dimension mismatch");
    if (init.k == 0)
        throw std::invalid_argument("minibatch_kmeans: empty initial centroid set");
    if (data.n < init.k)
        throw std::invalid_argument("minibatch_kmeans: fewer points than clusters");
    if (params.batch_size == 0 || params.num_batches == 0)
        throw std::invalid_argument("minibatch_kmeans: batch size and count must be positive");

    const std::size_t n = data.n;
    const std::size_t d = data.d;
    const std::size_t k = init.k;
    const std::size_t b = params.batch_size;

    CentroidSet centers = init;
    std::vector<std::uint64_t> counts(k, 0);  // points absorbed per center
    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::vector<std::size_t> batch(b);
    std::vector<std::uint32_t> nearest(b);
    for (std::uint32_t t = 0; t < params.num_batches; ++t) {
        for (std::size_t i = 0; i < b; ++i) batch[i] = pick(rng);

        // Cache the nearest center per batch point, then apply the updates
        // point by point.
        for (std::size_t i = 0; i < b; ++i) {
            const double* x = data.points.data() + batch[i] * d;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_j = 0;
            for (std::size_t j = 0; j < k; ++j) {
                const double dist =
                    detail::sq_dist(x, centers.centroids.data() + j * d, d);
                if (dist < best) {
                    best = dist;
                    best_j = static_cast<std::uint32_t>(j);
                }
            }
            nearest[i] = best_j;
        }
        counter.add(static_cast<std::uint64_t>(b) * k);

        for (std::size_t i = 0; i < b; ++i) {
            const double* x = data.points.data() + batch[i] * d;
            double* c = centers.centroids.data() + nearest[i] * d;
            counts[nearest[i]] += 1;
            const double eta = 1.0 / static_cast<double>(counts[nearest[i]]);
            for (std::size_t j = 0; j < d; ++j) c[j] += eta * (x[j] - c[j]);
        }
    }
    return centers;
}

}  // namespace rpkm
