#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rpkm/baselines.hpp"
#include "rpkm/bench.hpp"
#include "rpkm/core.hpp"
#include "rpkm/data_io.hpp"
#include "rpkm/grid.hpp"
#include "rpkm/lloyd.hpp"
#include "rpkm/rpkm.hpp"

namespace py = pybind11;

namespace {

rpkm::Dataset dataset_from_array(const py::array_t<double>& points) {
    const auto buf = points.request();
    if (buf.ndim != 2)
        throw std::invalid_argument("points must be a 2-D array");
    rpkm::Dataset data;
    data.n = static_cast<std::size_t>(buf.shape[0]);
    data.d = static_cast<std::size_t>(buf.shape[1]);
    data.points.resize(data.n * data.d);
    auto view = points.unchecked<2>();
    for (std::size_t i = 0; i < data.n; ++i)
        for (std::size_t j = 0; j < data.d; ++j)
            data.points[i * data.d + j] = view(i, j);
    data.validate();
    return data;
}

rpkm::CentroidSet centroids_from_array(const py::array_t<double>& c) {
    const auto buf = c.request();
    if (buf.ndim != 2)
        throw std::invalid_argument("centroids must be a 2-D array");
    rpkm::CentroidSet out(static_cast<std::size_t>(buf.shape[0]),
                          static_cast<std::size_t>(buf.shape[1]));
    auto view = c.unchecked<2>();
    for (std::size_t i = 0; i < out.k; ++i)
        for (std::size_t j = 0; j < out.d; ++j)
            out.centroids[i * out.d + j] = view(i, j);
    return out;
}

py::array_t<double> centroids_to_array(const rpkm::CentroidSet& c) {
    py::array_t<double> out({c.k, c.d});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < c.k; ++i)
        for (std::size_t j = 0; j < c.d; ++j) view(i, j) = c.centroids[i * c.d + j];
    return out;
}

py::dict wl_result_to_dict(const rpkm::WLResult& res) {
    py::dict out;
    out["centroids"] = centroids_to_array(res.centroids);
    out["labels"] = py::cast(res.assignment);
    out["iterations"] = res.iterations;
    out["error_trace"] = py::cast(res.error_trace);
    out["dist_evals"] = res.distance_evals;
    out["repair_passes"] = res.repair_passes;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Grid-based recursive-partition K-means with exact distance accounting";

    m.def(
        "generate_mixture",
        [](std::size_t n, std::size_t d, std::uint32_t components,
           std::uint64_t seed, double sigma, double separation_sigmas,
           double box_side) {
            rpkm::MixtureSpec spec{n, d, components, seed, sigma,
                                   separation_sigmas, box_side};
            const rpkm::MixtureData mix = rpkm::generate_mixture(spec);
            py::array_t<double> points({mix.data.n, mix.data.d});
            auto view = points.mutable_unchecked<2>();
            for (std::size_t i = 0; i < mix.data.n; ++i)
                for (std::size_t j = 0; j < mix.data.d; ++j)
                    view(i, j) = mix.data.points[i * mix.data.d + j];
            return py::make_tuple(points, py::cast(mix.labels));
        },
        py::arg("n"), py::arg("d"), py::arg("components"), py::arg("seed"),
        py::arg("sigma") = 1.0, py::arg("separation_sigmas") = 4.0,
        py::arg("box_side") = 0.0,
        "Seeded Gaussian-mixture dataset; returns (points, labels).");

    m.def(
        "partition_sizes",
        [](const py::array_t<double>& points, std::uint32_t m) {
            const rpkm::Dataset data = dataset_from_array(points);
            const rpkm::PartitionSequence seq = rpkm::build_sequence(data, m);
            std::vector<std::size_t> sizes;
            for (const auto& level : seq.levels) sizes.push_back(level.cells());
            return sizes;
        },
        py::arg("points"), py::arg("m"),
        "Cell counts |P_1|..|P_m| of the grid levels for this dataset.");

    m.def(
        "rpkm",
        [](const py::array_t<double>& points, std::uint32_t k, std::uint32_t m,
           std::uint64_t seed, double rel_tolerance, std::uint32_t max_iterations,
           double displacement_threshold, bool evaluate) {
            const rpkm::Dataset data = dataset_from_array(points);
            rpkm::RPKMParams params;
            params.k = k;
            params.m = m;
            params.seed = seed;
            params.wl.rel_tolerance = rel_tolerance;
            params.wl.max_iterations = max_iterations;
            params.displacement_threshold = displacement_threshold;
            params.evaluate = evaluate;
            const rpkm::RPKMResult res = rpkm::run_rpkm(data, params);

            py::list steps;
            for (const auto& step : res.steps) {
                py::dict s;
                s["level"] = step.level;
                s["cells"] = step.cells;
                s["wl_iters"] = step.wl_iterations;
                s["centroid_error"] = step.centroid_error;
                s["dist_evals"] = step.dist_evals;
                s["delta"] = step.delta;
                if (step.full_error) s["full_error"] = *step.full_error;
                if (step.std_err) s["std_error"] = *step.std_err;
                steps.append(std::move(s));
            }
            py::dict out;
            out["centroids"] = centroids_to_array(res.centroids);
            out["steps"] = steps;
            out["start_level"] = res.start_level;
            out["total_dist_evals"] = res.dist_evals;
            out["eval_dist_evals"] = res.eval_dist_evals;
            return out;
        },
        py::arg("points"), py::arg("k"), py::arg("m") = 6, py::arg("seed") = 0,
        py::arg("rel_tolerance") = 1e-9, py::arg("max_iterations") = 1000,
        py::arg("displacement_threshold") = 0.0, py::arg("evaluate") = false,
        "Run grid-based RPKM; returns centroids plus per-step records.");

    m.def(
        "kmeanspp",
        [](const py::array_t<double>& points, std::uint32_t k, std::uint64_t seed) {
            const rpkm::Dataset data = dataset_from_array(points);
            rpkm::DistanceCounter counter;
            std::mt19937_64 rng(seed);
            const rpkm::CentroidSet c = rpkm::kmeanspp_init(data, k, rng, counter);
            return py::make_tuple(centroids_to_array(c), counter.count);
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0,
        "D^2 seeding; returns (centroids, dist_evals).");

    m.def(
        "lloyd",
        [](const py::array_t<double>& points, const py::array_t<double>& init,
           double rel_tolerance, std::uint32_t max_iterations) {
            const rpkm::Dataset data = dataset_from_array(points);
            const rpkm::CentroidSet c0 = centroids_from_array(init);
            rpkm::WLParams params;
            params.rel_tolerance = rel_tolerance;
            params.max_iterations = max_iterations;
            rpkm::DistanceCounter counter;
            return wl_result_to_dict(rpkm::lloyd(data, c0, params, counter));
        },
        py::arg("points"), py::arg("init"), py::arg("rel_tolerance") = 1e-9,
        py::arg("max_iterations") = 1000,
        "Full-data Lloyd from the given centroids.");

    m.def(
        "weighted_lloyd",
        [](const py::array_t<double>& means, const std::vector<std::uint64_t>& weights,
           const py::array_t<double>& init, double rel_tolerance,
           std::uint32_t max_iterations) {
            const rpkm::Dataset reps = dataset_from_array(means);
            if (weights.size() != reps.n)
                throw std::invalid_argument("weights length must match means rows");
            const rpkm::WeightedPoints view{reps.n, reps.d, reps.points, weights};
            const rpkm::CentroidSet c0 = centroids_from_array(init);
            rpkm::WLParams params;
            params.rel_tolerance = rel_tolerance;
            params.max_iterations = max_iterations;
            rpkm::DistanceCounter counter;
            return wl_result_to_dict(
                rpkm::weighted_lloyd(view, c0, params, counter));
        },
        py::arg("means"), py::arg("weights"), py::arg("init"),
        py::arg("rel_tolerance") = 1e-9, py::arg("max_iterations") = 1000,
        "Weighted Lloyd over representatives and weights.");

    m.def(
        "minibatch_kmeans",
        [](const py::array_t<double>& points, const py::array_t<double>& init,
           std::size_t b, std::uint32_t t, std::uint64_t seed) {
            const rpkm::Dataset data = dataset_from_array(points);
            const rpkm::CentroidSet c0 = centroids_from_array(init);
            rpkm::MBParams params{b, t, seed};
            rpkm::DistanceCounter counter;
            const rpkm::CentroidSet c =
                rpkm::minibatch_kmeans(data, c0, params, counter);
            return py::make_tuple(centroids_to_array(c), counter.count);
        },
        py::arg("points"), py::arg("init"), py::arg("b") = 100,
        py::arg("t") = 100, py::arg("seed") = 0,
        "Minibatch K-means; returns (centroids, dist_evals).");

    m.def(
        "full_error",
        [](const py::array_t<double>& points, const py::array_t<double>& centroids) {
            const rpkm::Dataset data = dataset_from_array(points);
            rpkm::DistanceCounter counter;
            const double err =
                rpkm::full_error(data, centroids_from_array(centroids), counter);
            return py::make_tuple(err, counter.count);
        },
        py::arg("points"), py::arg("centroids"),
        "Sum of squared distances to the nearest centroid; returns (error, dist_evals).");

    m.def(
        "std_error",
        [](const py::array_t<double>& points, const py::array_t<double>& centroids,
           double rel_tolerance, std::uint32_t max_iterations) {
            const rpkm::Dataset data = dataset_from_array(points);
            rpkm::WLParams params;
            params.rel_tolerance = rel_tolerance;
            params.max_iterations = max_iterations;
            rpkm::DistanceCounter eval;
            return rpkm::std_error(data, centroids_from_array(centroids), params,
                                   eval);
        },
        py::arg("points"), py::arg("centroids"), py::arg("rel_tolerance") = 1e-9,
        py::arg("max_iterations") = 1000,
        "Relative gap to the Lloyd solution seeded from these centroids (<= 0).");
}
