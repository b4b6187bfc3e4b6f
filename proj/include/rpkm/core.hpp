#ifndef RPKM_CORE_HPP
#define RPKM_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rpkm {

/// Tally of squared-distance evaluations. One counter belongs to exactly one
/// run; every d-dimensional squared distance computed on its behalf bumps it
/// by one.
struct DistanceCounter {
    std::uint64_t count = 0;

    void add(std::uint64_t evals = 1) { count += evals; }
};

/// A set of n points in R^d, stored row-major.
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> points;  // n*d, row-major

    Dataset() = default;
    Dataset(std::size_t n_, std::size_t d_, std::vector<double> pts);

    std::span<const double> row(std::size_t i) const {
        return {points.data() + i * d, d};
    }
    std::span<double> row(std::size_t i) {
        return {points.data() + i * d, d};
    }

    /// Throws std::invalid_argument on empty data or non-finite coordinates.
    void validate() const;
};

/// Center of mass and cardinality of one partition subset.
struct Representative {
    std::uint64_t weight = 0;
    std::vector<double> mean;
};

/// Non-owning view over a set of weighted points (representatives).
struct WeightedPoints {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::span<const double> means;          // count*dim, row-major
    std::span<const std::uint64_t> weights; // count

    std::span<const double> mean(std::size_t i) const {
        return {means.data() + i * dim, dim};
    }
};

/// K centroids in R^d. The row index is the identity of a centroid and is
/// stable across operations.
struct CentroidSet {
    std::size_t k = 0;
    std::size_t d = 0;
    std::vector<double> centroids;  // k*d, row-major

    CentroidSet() = default;
    CentroidSet(std::size_t k_, std::size_t d_)
        : k(k_), d(d_), centroids(k_ * d_, 0.0) {}
    CentroidSet(std::size_t k_, std::size_t d_, std::vector<double> c);

    std::span<const double> row(std::size_t j) const {
        return {centroids.data() + j * d, d};
    }
    std::span<double> row(std::size_t j) {
        return {centroids.data() + j * d, d};
    }
};

/// Cluster label per representative (or per point), values in [0, K).
using Assignment = std::vector<std::uint32_t>;

// -- error types --------------------------------------------------------

/// A cluster came out empty where a nonempty one was required.
class EmptyClusterError : public std::runtime_error {
public:
    EmptyClusterError(std::size_t cluster, const std::string& what);
    std::size_t cluster() const { return cluster_; }

private:
    std::size_t cluster_;
};

/// Empty clusters that re-seeding cannot fix (fewer representatives than
/// clusters).
class UnresolvableEmptyClusterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reference error is zero while the candidate error is not; the relative
/// error measure is undefined.
class DegenerateZeroError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested configuration cannot be satisfied.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// -- core operations ----------------------------------------------------

/// Squared Euclidean distance between two d-vectors. Books exactly one
/// evaluation on the counter.
double squared_distance(std::span<const double> a, std::span<const double> b,
                        DistanceCounter& counter);

/// Sum over all points of the squared distance to the nearest centroid.
/// Books n*K evaluations.
double full_error(const Dataset& data, const CentroidSet& centroids,
                  DistanceCounter& counter);

/// Weighted nearest-centroid error of a representative set, plus the induced
/// assignment. Books |reps|*K evaluations.
std::pair<double, Assignment> centroid_error(const WeightedPoints& reps,
                                             const CentroidSet& centroids,
                                             DistanceCounter& counter);

/// Nearest-centroid label per representative; equidistant centroids resolve
/// to the lowest index. Books |reps|*K evaluations.
Assignment induce_assignment(const WeightedPoints& reps,
                             const CentroidSet& centroids,
                             DistanceCounter& counter);

/// Weighted center of mass per cluster. No distance evaluations. Throws
/// EmptyClusterError if some cluster in [0, k) has no members.
CentroidSet induce_centroids(const WeightedPoints& reps,
                             const Assignment& labels, std::size_t k);

namespace detail {

// Unchecked squared distance; callers book the evaluation themselves.
inline double sq_dist(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace detail

}  // namespace rpkm

#endif  // RPKM_CORE_HPP
