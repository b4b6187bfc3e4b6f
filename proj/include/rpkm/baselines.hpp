#ifndef RPKM_BASELINES_HPP
#define RPKM_BASELINES_HPP

#include <cstdint>
#include <random>

#include "rpkm/core.hpp"
#include "rpkm/lloyd.hpp"

namespace rpkm {

struct MBParams {
    std::size_t batch_size = 100;   // b
    std::uint32_t num_batches = 100;  // t
    std::uint64_t seed = 0;
};

/// D^2 seeding: the first center is uniform over the points, each further
/// center is sampled with probability proportional to the squared distance
/// to the nearest center chosen so far. When the remaining squared-distance
/// mass is zero (duplicate data), the next center falls back to a uniform
/// draw over the not-yet-selected points. Books n evaluations per added
/// center (n*(K-1) total).
CentroidSet kmeanspp_init(const Dataset& data, std::uint32_t k,
                          std::mt19937_64& rng, DistanceCounter& counter);

/// Sculley-style minibatch K-means: per batch, sample b points uniformly
/// with replacement, assign them to the nearest center (b*K evaluations),
/// then move each assigned center toward its point with per-center learning
/// rate 1/counts[c]. Runs exactly t batches; books t*b*K evaluations.
CentroidSet minibatch_kmeans(const Dataset& data, const CentroidSet& init,
                             const MBParams& params, DistanceCounter& counter);

}  // namespace rpkm

#endif  // RPKM_BASELINES_HPP
