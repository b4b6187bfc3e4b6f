#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rpkm/data_io.hpp"

using namespace rpkm;

namespace {

struct TempFile {
    std::filesystem::path path;

    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("rpkm_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++) + ".csv");
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_SUITE_BEGIN("data_io");

TEST_CASE("generate_mixture is deterministic per seed") {
    MixtureSpec spec;
    spec.n = 1000;
    spec.d = 2;
    spec.components = 3;
    spec.seed = 7;
    const MixtureData a = generate_mixture(spec);
    const MixtureData b = generate_mixture(spec);
    CHECK(a.data.points == b.data.points);
    CHECK(a.labels == b.labels);
    CHECK(a.component_means == b.component_means);

    spec.seed = 8;
    const MixtureData c = generate_mixture(spec);
    CHECK(a.data.points != c.data.points);
}

TEST_CASE("generate_mixture separates component means") {
    MixtureSpec spec;
    spec.n = 200;
    spec.d = 2;
    spec.components = 5;
    spec.seed = 3;
    const MixtureData mix = generate_mixture(spec);
    const double min_sep = spec.min_separation_sigmas * spec.sigma;
    for (std::uint32_t a = 0; a < spec.components; ++a) {
        for (std::uint32_t b = a + 1; b < spec.components; ++b) {
            double dist = 0.0;
            for (std::size_t j = 0; j < spec.d; ++j) {
                const double diff = mix.component_means[a * spec.d + j] -
                                    mix.component_means[b * spec.d + j];
                dist += diff * diff;
            }
            CHECK(std::sqrt(dist) >= min_sep);
        }
    }
}

TEST_CASE("K=1 sample mean obeys the CLT bound") {
    MixtureSpec spec;
    spec.n = 10000;
    spec.d = 2;
    spec.components = 1;
    spec.seed = 11;
    const MixtureData mix = generate_mixture(spec);

    std::vector<double> mean(spec.d, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < spec.d; ++j)
            mean[j] += mix.data.points[i * spec.d + j];
    double dist = 0.0;
    for (std::size_t j = 0; j < spec.d; ++j) {
        mean[j] /= static_cast<double>(spec.n);
        const double diff = mean[j] - mix.component_means[j];
        dist += diff * diff;
    }
    CHECK(std::sqrt(dist) <=
          4.0 * spec.sigma / std::sqrt(static_cast<double>(spec.n)));
}

TEST_CASE("the 4-sigma separation keeps pairwise overlap under 5 percent") {
    MixtureSpec spec;
    spec.n = 10;
    spec.d = 2;
    spec.components = 3;
    spec.seed = 17;
    const MixtureData mix = generate_mixture(spec);

    // Closest pair of component means.
    std::size_t worst_a = 0, worst_b = 1;
    double worst = std::numeric_limits<double>::infinity();
    for (std::uint32_t a = 0; a < spec.components; ++a) {
        for (std::uint32_t b = a + 1; b < spec.components; ++b) {
            double dist = 0.0;
            for (std::size_t j = 0; j < spec.d; ++j) {
                const double diff = mix.component_means[a * spec.d + j] -
                                    mix.component_means[b * spec.d + j];
                dist += diff * diff;
            }
            if (dist < worst) {
                worst = dist;
                worst_a = a;
                worst_b = b;
            }
        }
    }

    // Monte-Carlo misclassification estimate for that pair.
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    const std::size_t samples = 100000;
    std::size_t misclassified = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double da = 0.0, db = 0.0;
        for (std::size_t j = 0; j < spec.d; ++j) {
            const double x = mix.component_means[worst_a * spec.d + j] + noise(rng);
            const double va = x - mix.component_means[worst_a * spec.d + j];
            const double vb = x - mix.component_means[worst_b * spec.d + j];
            da += va * va;
            db += vb * vb;
        }
        if (db < da) ++misclassified;
    }
    CHECK(static_cast<double>(misclassified) / static_cast<double>(samples) < 0.05);
}

TEST_CASE("generate_mixture rejects impossible specs") {
    MixtureSpec spec;
    spec.n = 100;
    spec.d = 2;
    spec.components = 50;
    spec.seed = 1;
    spec.box_side = 1.0;  // 50 means, 4-sigma apart, in a unit box
    CHECK_THROWS_AS(generate_mixture(spec), InfeasibleError);

    MixtureSpec tiny;
    tiny.n = 2;
    tiny.d = 1;
    tiny.components = 3;
    CHECK_THROWS_AS(generate_mixture(tiny), std::invalid_argument);
}

TEST_CASE("load_csv reads plain numeric files") {
    std::ostringstream content;
    for (int r = 0; r < 10; ++r)
        content << r << "," << r * 2 << "," << r * 3 << "\n";
    const TempFile file(content.str());

    SubsampleSpec spec;
    spec.path = file.path.string();
    const Dataset data = load_csv(spec);
    CHECK(data.n == 10);
    CHECK(data.d == 3);
    CHECK(data.points[4 * 3 + 2] == 12.0);
}

TEST_CASE("load_csv detects headers and whitespace delimiters") {
    const TempFile with_header("x,y\n1,2\n3,4\n");
    SubsampleSpec spec;
    spec.path = with_header.path.string();
    CsvInfo info;
    const Dataset data = load_csv(spec, &info);
    CHECK(info.had_header);
    CHECK(data.n == 2);
    CHECK(data.d == 2);

    const TempFile spaced("1 2 3\n4 5 6\n");
    SubsampleSpec spec2;
    spec2.path = spaced.path.string();
    CsvInfo info2;
    const Dataset data2 = load_csv(spec2, &info2);
    CHECK(info2.delimiter == ' ');
    CHECK(data2.n == 2);
    CHECK(data2.d == 3);
}

TEST_CASE("load_csv subsampling is deterministic and uniform-free of bias") {
    std::ostringstream content;
    for (int r = 0; r < 50; ++r) content << r << "," << 100 + r << "\n";
    const TempFile file(content.str());

    SubsampleSpec spec;
    spec.path = file.path.string();
    spec.n_select = 20;
    spec.d_select = 1;
    spec.seed = 5;
    const Dataset a = load_csv(spec);
    const Dataset b = load_csv(spec);
    CHECK(a.points == b.points);
    CHECK(a.n == 20);
    CHECK(a.d == 1);
}

TEST_CASE("select-all subsampling preserves the column means") {
    std::ostringstream content;
    content.precision(17);
    double sums[3] = {0, 0, 0};
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    const int rows = 25;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < 3; ++c) {
            const double v = value(rng);
            sums[c] += v;
            content << v << (c + 1 < 3 ? "," : "\n");
        }
    }
    const TempFile file(content.str());

    SubsampleSpec spec;
    spec.path = file.path.string();
    spec.n_select = rows;
    spec.d_select = 3;
    spec.seed = 77;
    const Dataset data = load_csv(spec);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < data.n; ++r) mean += data.points[r * 3 + c];
        mean /= static_cast<double>(rows);
        CHECK(mean == doctest::Approx(sums[c] / rows).epsilon(1e-9));
    }
}

TEST_CASE("load_csv reports the offending row and column") {
    const TempFile bad("1,2\n3,oops\n");
    SubsampleSpec spec;
    spec.path = bad.path.string();
    try {
        load_csv(spec);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        CHECK(what.find("row 2") != std::string::npos);
        CHECK(what.find("column 2") != std::string::npos);
    }

    const TempFile ragged("1,2\n3\n");
    SubsampleSpec spec2;
    spec2.path = ragged.path.string();
    CHECK_THROWS_AS(load_csv(spec2), std::runtime_error);

    const TempFile fine("1,2\n3,4\n");
    SubsampleSpec spec3;
    spec3.path = fine.path.string();
    spec3.n_select = 5;
    CHECK_THROWS_AS(load_csv(spec3), std::invalid_argument);
}

TEST_CASE("run records round-trip through JSON lines") {
    RunRecord record;
    record.algorithm = "rpkm";
    record.params["m"] = 6;
    record.params["dataset"] = {{"source", "mixture"}, {"seed", 1}};
    record.seed = 42;
    record.n = 1000;
    record.d = 2;
    record.k = 3;
    RunRecord::Step step;
    step.level = 1;
    step.cells = 4;
    step.wl_iters = 2;
    step.dist_evals = 24;
    step.centroid_error = 14050.06;
    step.std_error = -0.05;
    step.delta = 1.5;
    record.per_step.push_back(step);
    record.total_dist_evals = 24;
    record.eval_dist_evals = 100;
    record.final_error = 11400.0;
    record.std_error = -0.01;

    std::stringstream sink;
    write_run_record(record, sink);
    write_run_record(record, sink);

    std::size_t lines = 0;
    std::string line;
    std::stringstream copy(sink.str());
    while (std::getline(copy, line)) ++lines;
    CHECK(lines == 2);

    std::stringstream source(sink.str());
    const auto records = read_run_records(source);
    REQUIRE(records.size() == 2);
    const RunRecord& got = records[0];
    CHECK(got.algorithm == record.algorithm);
    CHECK(got.params == record.params);
    CHECK(got.seed == record.seed);
    CHECK(got.n == record.n);
    CHECK(got.k == record.k);
    REQUIRE(got.per_step.size() == 1);
    CHECK(got.per_step[0].cells == 4);
    CHECK(got.per_step[0].centroid_error == step.centroid_error);
    CHECK(got.per_step[0].std_error == step.std_error);
    CHECK(!got.per_step[0].full_error.has_value());
    CHECK(got.total_dist_evals == record.total_dist_evals);
    CHECK(got.final_error == record.final_error);
    CHECK(got.std_error == record.std_error);
    CHECK(!got.wall_time_ms.has_value());
    CHECK(!got.error.has_value());
}

TEST_CASE("record JSON carries exactly the documented fields") {
    RunRecord record;
    record.algorithm = "kmpp";
    record.params["wl_rel_tolerance"] = 1e-9;
    record.n = 10;
    record.d = 2;
    record.k = 2;
    RunRecord::Step step;
    record.per_step.push_back(step);
    record.final_error = 1.0;

    const ordered_json j = record_to_json(record);
    const std::set<std::string> allowed{
        "algorithm", "params",          "seed",           "n",
        "d",         "K",               "per_step",       "total_dist_evals",
        "eval_dist_evals", "final_error", "std_error",    "wall_time_ms",
        "error"};
    const std::set<std::string> required{
        "algorithm", "params", "seed", "n", "d", "K", "per_step",
        "total_dist_evals", "eval_dist_evals", "final_error"};
    for (const auto& [key, value] : j.items()) CHECK(allowed.count(key) == 1);
    for (const auto& key : required) CHECK(j.contains(key));

    const std::set<std::string> step_allowed{
        "level", "cells", "wl_iters", "dist_evals", "centroid_error",
        "full_error", "std_error", "delta"};
    for (const auto& [key, value] : j["per_step"][0].items())
        CHECK(step_allowed.count(key) == 1);
}

TEST_SUITE_END();
