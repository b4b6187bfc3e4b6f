#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rpkm/lloyd.hpp"
#include "testutil.hpp"

using namespace rpkm;
using testutil::random_centroids;
using testutil::random_dataset;

namespace {

// Reference textbook Lloyd: assign, update, repeat until the labels stop
// changing. No tolerance stopping, no instrumentation. Test-only oracle.
struct ReferenceResult {
    std::vector<double> centroids;
    std::vector<std::uint32_t> labels;
};

ReferenceResult reference_lloyd(const Dataset& data, const CentroidSet& init,
                                std::uint32_t max_rounds = 200) {
    const std::size_t n = data.n, d = data.d, k = init.k;
    std::vector<double> centroids = init.centroids;
    std::vector<std::uint32_t> labels(n, 0);
    for (std::uint32_t round = 0; round < max_rounds; ++round) {
        std::vector<std::uint32_t> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t arg = 0;
            for (std::size_t j = 0; j < k; ++j) {
                double dist = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff =
                        data.points[i * d + t] - centroids[j * d + t];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    arg = static_cast<std::uint32_t>(j);
                }
            }
            next[i] = arg;
        }
        const bool stable = round > 0 && next == labels;
        labels = next;
        if (stable) break;
        std::vector<double> sums(k * d, 0.0);
        std::vector<double> counts(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < d; ++t)
                sums[labels[i] * d + t] += data.points[i * d + t];
            counts[labels[i]] += 1.0;
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0.0) continue;  // keep the stale centroid
            for (std::size_t t = 0; t < d; ++t)
                centroids[j * d + t] = sums[j * d + t] / counts[j];
        }
    }
    return {centroids, labels};
}

}  // namespace

TEST_SUITE_BEGIN("lloyd");

TEST_CASE("weighted_lloyd converges to the weighted mean for K=1") {
    testutil::Reps reps;
    reps.add(1, {0.0});
    reps.add(3, {10.0});
    DistanceCounter counter;
    const WLResult res = weighted_lloyd(reps.view(), CentroidSet(1, 1, {99.0}),
                                        WLParams{}, counter);
    CHECK(res.centroids.centroids[0] == 7.5);
    CHECK(res.iterations == 1);
    CHECK(res.error_trace.back() ==
          doctest::Approx(1 * 7.5 * 7.5 + 3 * 2.5 * 2.5).epsilon(1e-12));
}

TEST_CASE("weighted_lloyd separates two unit-weight reps") {
    testutil::Reps reps;
    reps.add(1, {0.0});
    reps.add(1, {10.0});
    DistanceCounter counter;
    const WLResult res = weighted_lloyd(
        reps.view(), CentroidSet(2, 1, {1.0, 9.0}), WLParams{}, counter);
    CHECK(res.centroids.centroids == std::vector<double>{0.0, 10.0});
    CHECK(res.error_trace.back() == 0.0);
}

TEST_CASE("error trace is non-increasing and ends at a fixed point") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        const Dataset means = random_dataset(40, 2, rng);
        testutil::Reps reps = testutil::singleton_reps(means);
        std::uniform_int_distribution<std::uint64_t> weight(1, 5);
        for (auto& w : reps.weights) w = weight(rng);

        DistanceCounter counter;
        const WLResult res = weighted_lloyd(
            reps.view(), random_centroids(3, 2, rng), WLParams{}, counter);

        for (std::size_t i = 1; i < res.error_trace.size(); ++i) {
            CHECK(res.error_trace[i] <=
                  res.error_trace[i - 1] +
                      1e-9 * std::max(1.0, std::abs(res.error_trace[i - 1])));
        }

        // Re-running from the result must not move anything.
        DistanceCounter again;
        const WLResult fixed =
            weighted_lloyd(reps.view(), res.centroids, WLParams{}, again);
        CHECK(fixed.iterations == 1);
        CHECK(fixed.centroids.centroids == res.centroids.centroids);
        CHECK(fixed.error_trace.back() ==
              doctest::Approx(res.error_trace.back()).epsilon(1e-12));
    }
}

TEST_CASE("halts within two iterations once the error stalls") {
    std::mt19937_64 rng(113);
    for (int trial = 0; trial < 40; ++trial) {
        const Dataset means = random_dataset(25, 2, rng);
        const testutil::Reps reps = testutil::singleton_reps(means);
        DistanceCounter counter;
        const WLResult res = weighted_lloyd(
            reps.view(), random_centroids(4, 2, rng), WLParams{}, counter);
        // trace = [E(C_0), E(G_0), E(C_1), ...]: E(C_r) sits at index 2r.
        for (std::uint32_t r = 0; r + 1 <= res.iterations; ++r) {
            if (res.error_trace[2 * r] == res.error_trace[2 * r + 1])
                CHECK(res.iterations <= r + 1);
            else if (2 * r + 2 < res.error_trace.size() &&
                     res.error_trace[2 * r + 1] == res.error_trace[2 * r + 2])
                CHECK(res.iterations <= r + 2);
        }
    }
}

TEST_CASE("distance counter matches the closed-form budget") {
    std::mt19937_64 rng(127);
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset means = random_dataset(30, 2, rng);
        const testutil::Reps reps = testutil::singleton_reps(means);
        DistanceCounter counter;
        const WLResult res = weighted_lloyd(
            reps.view(), random_centroids(3, 2, rng), WLParams{}, counter);
        const std::uint64_t rk = means.n * 3;
        const std::uint64_t expected =
            (1 + res.iterations) * rk + res.repair_passes * (means.n + rk);
        CHECK(res.distance_evals == expected);
        CHECK(counter.count == expected);
    }
}

TEST_CASE("repair_empty_clusters re-seeds at the largest contribution") {
    testutil::Reps reps;
    reps.add(1, {0.0});
    reps.add(1, {1.0});
    reps.add(1, {10.0});
    const CentroidSet centroids(2, 1, {0.0, 100.0});
    const Assignment all_first{0, 0, 0};

    DistanceCounter counter;
    const RepairResult out =
        repair_empty_clusters(all_first, reps.view(), centroids, counter);
    CHECK(out.resolved);
    // Contribution is largest for the rep at 10; it seeds the empty cluster.
    CHECK(out.centroids.centroids[1] == 10.0);
    CHECK(out.labels == Assignment{0, 0, 1});
    CHECK(counter.count == 3 + 3 * 2);
}

TEST_CASE("repair_empty_clusters is the identity when nothing is empty") {
    testutil::Reps reps;
    reps.add(1, {0.0});
    reps.add(1, {10.0});
    const CentroidSet centroids(2, 1, {1.0, 9.0});
    DistanceCounter counter;
    const RepairResult out =
        repair_empty_clusters(Assignment{0, 1}, reps.view(), centroids, counter);
    CHECK(out.resolved);
    CHECK(out.labels == Assignment{0, 1});
    CHECK(out.centroids.centroids == centroids.centroids);
    CHECK(counter.count == 0);
}

TEST_CASE("repair_empty_clusters refuses K above the representative count") {
    testutil::Reps reps;
    reps.add(1, {0.0});
    reps.add(1, {10.0});
    const CentroidSet centroids(3, 1, {0.0, 10.0, 20.0});
    DistanceCounter counter;
    CHECK_THROWS_AS(
        repair_empty_clusters(Assignment{0, 1}, reps.view(), centroids, counter),
        UnresolvableEmptyClusterError);
}

TEST_CASE("an empty cluster mid-run is repaired and the run continues") {
    const Dataset data = testutil::make_dataset({{0.0}, {1.0}, {100.0}});
    DistanceCounter counter;
    const WLResult res =
        lloyd(data, CentroidSet(2, 1, {200.0, 300.0}), WLParams{}, counter);
    CHECK(res.repair_passes >= 1);
    CHECK(res.error_trace.back() == doctest::Approx(0.5).epsilon(1e-12));
    for (std::size_t i = 1; i < res.error_trace.size(); ++i)
        CHECK(res.error_trace[i] <= res.error_trace[i - 1] + 1e-9);
}

TEST_CASE("duplicate-only data converges to zero error for any K") {
    Dataset data;
    data.n = 5;
    data.d = 1;
    data.points.assign(5, 7.0);
    DistanceCounter counter;
    const WLResult res =
        lloyd(data, CentroidSet(2, 1, {0.0, 1.0}), WLParams{}, counter);
    CHECK(res.error_trace.back() == 0.0);

    DistanceCounter c3;
    const WLResult res3 =
        lloyd(data, CentroidSet(3, 1, {0.0, 1.0, 2.0}), WLParams{}, c3);
    CHECK(res3.error_trace.back() == 0.0);
}

TEST_CASE("lloyd and weighted_lloyd on the singleton partition agree exactly") {
    std::mt19937_64 rng(131);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> n_pick(3, 40);
        std::uniform_int_distribution<std::size_t> k_pick(1, 4);
        const std::size_t n = n_pick(rng);
        const std::size_t k = std::min(k_pick(rng), n);
        const Dataset data = random_dataset(n, 2, rng);
        const testutil::Reps reps = testutil::singleton_reps(data);
        const CentroidSet init = random_centroids(k, 2, rng);

        DistanceCounter c1, c2;
        const WLResult direct = lloyd(data, init, WLParams{}, c1);
        const WLResult weighted = weighted_lloyd(reps.view(), init, WLParams{}, c2);

        CHECK(direct.error_trace == weighted.error_trace);
        CHECK(direct.centroids.centroids == weighted.centroids.centroids);
        CHECK(direct.assignment == weighted.assignment);
        CHECK(direct.iterations == weighted.iterations);
        CHECK(direct.distance_evals == weighted.distance_evals);
        CHECK(direct.repair_passes == weighted.repair_passes);
    }
}

TEST_CASE("lloyd lands on the reference fixed point") {
    std::mt19937_64 rng(137);
    int compared = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset data = random_dataset(30, 2, rng);
        const CentroidSet init = random_centroids(3, 2, rng, 8.0);

        WLParams exact;
        exact.rel_tolerance = 0.0;
        DistanceCounter counter;
        const WLResult res = lloyd(data, init, exact, counter);
        // The oracle has no re-seeding, so only repair-free runs compare.
        if (res.repair_passes > 0) continue;
        const ReferenceResult ref = reference_lloyd(data, init);

        CHECK(res.centroids.centroids == ref.centroids);
        CHECK(res.assignment == ref.labels);
        ++compared;
    }
    CHECK(compared >= 10);
}

TEST_CASE("history records one clustering per assignment step") {
    std::mt19937_64 rng(139);
    const Dataset data = random_dataset(30, 2, rng);
    const testutil::Reps reps = testutil::singleton_reps(data);
    WLParams params;
    params.record_history = true;
    DistanceCounter counter;
    const WLResult res =
        weighted_lloyd(reps.view(), random_centroids(3, 2, rng), params, counter);
    CHECK(res.history.size() == res.iterations + 1);
    CHECK(res.history.back() == res.assignment);
}

TEST_SUITE_END();
