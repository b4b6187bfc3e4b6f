#include "rpkm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

namespace rpkm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Salts for the seed paths of the different consumers.
constexpr std::uint64_t kSaltDataset = 0xDA7A;
constexpr std::uint64_t kSaltRpkm = 0x9137;
constexpr std::uint64_t kSaltKmpp = 0x14E5;
constexpr std::uint64_t kSaltMb = 0x3B00;

struct TaskContext {
    const ExperimentConfig* config;
    std::size_t n_idx, d_idx, k_idx, rep;
    std::size_t n;
    std::size_t d;
    std::uint32_t k;
};

ordered_json dataset_params(const TaskContext& ctx, std::uint64_t dataset_seed,
                            const CsvInfo* csv) {
    ordered_json j;
    if (ctx.config->csv_path.has_value()) {
        j["source"] = "csv";
        j["path"] = *ctx.config->csv_path;
        j["delimiter"] = csv && csv->delimiter == ' ' ? "whitespace" : "comma";
        j["header"] = csv ? csv->had_header : false;
        j["n_select"] = ctx.n;
        j["d_select"] = ctx.d;
    } else {
        j["source"] = "mixture";
        j["components"] = ctx.k;
        j["sigma"] = ctx.config->sigma;
        j["separation_sigmas"] = ctx.config->separation_sigmas;
        j["box_side"] = ctx.config->box_side_sigmas * ctx.config->sigma;
        j["mixing"] = "uniform";
    }
    j["seed"] = dataset_seed;
    return j;
}

RunRecord base_record(const TaskContext& ctx, const std::string& algorithm,
                      std::uint64_t seed) {
    RunRecord record;
    record.algorithm = algorithm;
    record.seed = seed;
    record.n = ctx.n;
    record.d = ctx.d;
    record.k = ctx.k;
    return record;
}

RunRecord run_rpkm_record(const TaskContext& ctx, const Dataset& data,
                          const ordered_json& data_params) {
    const ExperimentConfig& cfg = *ctx.config;
    const std::uint64_t seed = derive_seed(
        cfg.seed, {kSaltRpkm, ctx.n_idx, ctx.d_idx, ctx.k_idx, ctx.rep});
    RunRecord record = base_record(ctx, "rpkm", seed);
    record.params["m"] = cfg.m;
    record.params["wl_rel_tolerance"] = cfg.wl.rel_tolerance;
    record.params["wl_max_iterations"] = cfg.wl.max_iterations;
    record.params["displacement_threshold"] = cfg.displacement_threshold;
    record.params["evaluation"] = cfg.evaluation;
    record.params["dataset"] = data_params;

    RPKMParams params;
    params.k = ctx.k;
    params.m = cfg.m;
    params.displacement_threshold = cfg.displacement_threshold;
    params.wl = cfg.wl;
    params.seed = seed;
    params.evaluate = cfg.evaluation;

    const RPKMResult res = run_rpkm(data, params);
    for (const auto& step : res.steps) {
        RunRecord::Step s;
        s.level = step.level;
        s.cells = step.cells;
        s.wl_iters = step.wl_iterations;
        s.dist_evals = step.dist_evals;
        s.centroid_error = step.centroid_error;
        s.full_error = step.full_error;
        s.std_error = step.std_err;
        s.delta = step.delta;
        record.per_step.push_back(std::move(s));
    }
    record.total_dist_evals = res.dist_evals;
    record.eval_dist_evals = res.eval_dist_evals;
    if (cfg.evaluation) {
        record.final_error = *res.steps.back().full_error;
        record.std_error = res.steps.back().std_err;
    } else {
        DistanceCounter eval;
        record.final_error = full_error(data, res.centroids, eval);
        record.eval_dist_evals += eval.count;
    }
    return record;
}

RunRecord run_kmpp_record(const TaskContext& ctx, const Dataset& data,
                          const ordered_json& data_params) {
    const ExperimentConfig& cfg = *ctx.config;
    const std::uint64_t seed = derive_seed(
        cfg.seed, {kSaltKmpp, ctx.n_idx, ctx.d_idx, ctx.k_idx, ctx.rep});
    RunRecord record = base_record(ctx, "kmpp", seed);
    record.params["wl_rel_tolerance"] = cfg.wl.rel_tolerance;
    record.params["wl_max_iterations"] = cfg.wl.max_iterations;
    record.params["dataset"] = data_params;

    DistanceCounter counter;
    std::mt19937_64 rng(seed);
    const CentroidSet init = kmeanspp_init(data, ctx.k, rng, counter);
    const WLResult res = lloyd(data, init, cfg.wl, counter);

    RunRecord::Step s;
    s.level = 0;
    s.cells = data.n;
    s.wl_iters = res.iterations;
    s.dist_evals = counter.count;
    s.centroid_error = res.error_trace.back();
    s.delta = 0.0;
    record.per_step.push_back(s);
    record.total_dist_evals = counter.count;
    record.final_error = res.error_trace.back();
    if (cfg.evaluation) {
        DistanceCounter eval;
        record.std_error = std_error(data, res.centroids, cfg.wl, eval);
        record.per_step.back().full_error = record.final_error;
        record.per_step.back().std_error = record.std_error;
        record.eval_dist_evals = eval.count;
    }
    return record;
}

RunRecord run_mb_record(const TaskContext& ctx, const Dataset& data,
                        const ordered_json& data_params, std::size_t b,
                        std::size_t b_idx) {
    const ExperimentConfig& cfg = *ctx.config;
    const std::uint64_t seed = derive_seed(
        cfg.seed, {kSaltMb, ctx.n_idx, ctx.d_idx, ctx.k_idx, ctx.rep, b_idx});
    RunRecord record = base_record(ctx, "mb", seed);
    record.params["b"] = b;
    record.params["t"] = cfg.mb_batches;
    record.params["init"] = "forgy";
    record.params["dataset"] = data_params;

    DistanceCounter counter;
    std::mt19937_64 rng(seed);
    // Uniform instance seeding keeps the minibatch budget at exactly t*b*K.
    const std::vector<std::uint64_t> ones(data.n, 1);
    const WeightedPoints points{data.n, data.d, data.points, ones};
    const CentroidSet init = forgy_init(points, ctx.k, rng);

    MBParams params;
    params.batch_size = b;
    params.num_batches = cfg.mb_batches;
    params.seed = derive_seed(seed, {1});
    const CentroidSet centers = minibatch_kmeans(data, init, params, counter);

    DistanceCounter eval;
    record.final_error = full_error(data, centers, eval);
    RunRecord::Step s;
    s.level = 0;
    s.cells = data.n;
    s.wl_iters = cfg.mb_batches;
    s.dist_evals = counter.count;
    s.centroid_error = record.final_error;
    s.delta = 0.0;
    if (cfg.evaluation) {
        record.std_error = std_error(data, centers, cfg.wl, eval);
        s.full_error = record.final_error;
        s.std_error = record.std_error;
    }
    record.per_step.push_back(s);
    record.total_dist_evals = counter.count;
    record.eval_dist_evals = eval.count;
    return record;
}

std::vector<RunRecord> run_task(const TaskContext& ctx) {
    const ExperimentConfig& cfg = *ctx.config;
    const std::uint64_t dataset_seed = derive_seed(
        cfg.seed, {kSaltDataset, ctx.n_idx, ctx.d_idx, ctx.k_idx, ctx.rep});

    Dataset data;
    CsvInfo csv_info;
    ordered_json data_params;
    std::optional<std::string> dataset_error;
    try {
        if (cfg.csv_path.has_value()) {
            SubsampleSpec spec;
            spec.path = *cfg.csv_path;
            spec.n_select = ctx.n;
            spec.d_select = ctx.d;
            spec.seed = dataset_seed;
            data = load_csv(spec, &csv_info);
        } else {
            MixtureSpec spec;
            spec.n = ctx.n;
            spec.d = ctx.d;
            spec.components = ctx.k;
            spec.seed = dataset_seed;
            spec.sigma = cfg.sigma;
            spec.min_separation_sigmas = cfg.separation_sigmas;
            spec.box_side = cfg.box_side_sigmas * cfg.sigma;
            data = generate_mixture(spec).data;
        }
        data_params = dataset_params(ctx, dataset_seed, &csv_info);
    } catch (const std::exception& e) {
        dataset_error = e.what();
    }

    std::vector<RunRecord> records;
    for (const auto& algorithm : cfg.algorithms) {
        const std::size_t expansions =
            algorithm == "mb" ? cfg.b_list.size() : std::size_t{1};
        for (std::size_t b_idx = 0; b_idx < expansions; ++b_idx) {
            const auto started = std::chrono::steady_clock::now();
            RunRecord record;
            try {
                if (dataset_error.has_value())
                    throw std::runtime_error("dataset: " + *dataset_error);
                if (algorithm == "rpkm")
                    record = run_rpkm_record(ctx, data, data_params);
                else if (algorithm == "kmpp")
                    record = run_kmpp_record(ctx, data, data_params);
                else
                    record = run_mb_record(ctx, data, data_params,
                                           cfg.b_list[b_idx], b_idx);
            } catch (const std::exception& e) {
                record = base_record(ctx, algorithm, 0);
                record.error = e.what();
            }
            if (cfg.timing) {
                const auto elapsed = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - started);
                record.wall_time_ms = elapsed.count();
            }
            records.push_back(std::move(record));
        }
    }
    return records;
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct FlatRow {
    std::string algorithm;
    std::size_t n = 0, d = 0;
    std::uint32_t k = 0;
    std::uint32_t level = 0;
    std::optional<std::size_t> b;
    double dist_evals = 0.0;
    std::optional<double> std_error;
};

std::string key_field(const FlatRow& row, const std::string& column) {
    if (column == "algorithm") return row.algorithm;
    if (column == "n") return std::to_string(row.n);
    if (column == "d") return std::to_string(row.d);
    if (column == "K") return std::to_string(row.k);
    if (column == "level") return std::to_string(row.level);
    if (column == "b") return row.b ? std::to_string(*row.b) : "";
    throw std::invalid_argument("summarize: unknown group-by column '" +
                                column + "'");
}

// Numeric-aware comparison so n=1000 sorts before n=10000.
bool key_less(const std::vector<std::string>& a,
              const std::vector<std::string>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) continue;
        char* end_a = nullptr;
        char* end_b = nullptr;
        const double va = std::strtod(a[i].c_str(), &end_a);
        const double vb = std::strtod(b[i].c_str(), &end_b);
        const bool num_a = !a[i].empty() && *end_a == '\0';
        const bool num_b = !b[i].empty() && *end_b == '\0';
        if (num_a && num_b) return va < vb;
        return a[i] < b[i];
    }
    return false;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (algorithms.empty())
        throw std::invalid_argument("config: no algorithms selected");
    const std::set<std::string> known = {"rpkm", "kmpp", "mb"};
    for (const auto& a : algorithms)
        if (!known.count(a))
            throw std::invalid_argument("config: unknown algorithm '" + a + "'");
    if (n_list.empty() || d_list.empty() || k_list.empty())
        throw std::invalid_argument("config: n, d and K lists must be nonempty");
    if (replicates < 1)
        throw std::invalid_argument("config: replicates must be >= 1");
    if (m < 1)
        throw std::invalid_argument("config: m must be >= 1");
    const bool wants_mb =
        std::find(algorithms.begin(), algorithms.end(), "mb") != algorithms.end();
    if (wants_mb && b_list.empty())
        throw std::invalid_argument("config: mb requires a nonempty b list");
    for (const auto k : k_list)
        if (k < 1) throw std::invalid_argument("config: K must be >= 1");
    if (jobs < 1)
        throw std::invalid_argument("config: jobs must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(base);
    for (const auto v : path) s = splitmix64(s ^ splitmix64(v));
    return s;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
    config.validate();

    std::vector<TaskContext> tasks;
    for (std::size_t n_idx = 0; n_idx < config.n_list.size(); ++n_idx)
        for (std::size_t d_idx = 0; d_idx < config.d_list.size(); ++d_idx)
            for (std::size_t k_idx = 0; k_idx < config.k_list.size(); ++k_idx)
                for (std::size_t rep = 0; rep < config.replicates; ++rep)
                    tasks.push_back({&config, n_idx, d_idx, k_idx, rep,
                                     config.n_list[n_idx], config.d_list[d_idx],
                                     config.k_list[k_idx]});

    std::vector<std::vector<RunRecord>> results(tasks.size());
    const std::uint32_t workers =
        std::min<std::uint32_t>(config.jobs,
                                static_cast<std::uint32_t>(tasks.size()));
    if (workers <= 1) {
        for (std::size_t t = 0; t < tasks.size(); ++t) results[t] = run_task(tasks[t]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::uint32_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t t = next.fetch_add(1);
                    if (t >= tasks.size()) return;
                    results[t] = run_task(tasks[t]);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<RunRecord> records;
    for (auto& group : results)
        for (auto& record : group) records.push_back(std::move(record));
    return records;
}

bool any_failed(const std::vector<RunRecord>& records) {
    return std::any_of(records.begin(), records.end(),
                       [](const RunRecord& r) { return r.error.has_value(); });
}

std::string SummaryTable::to_csv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out << ',';
        out << columns[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    return out.str();
}

SummaryTable summarize(const std::vector<RunRecord>& records,
                       std::span<const std::string> group_by) {
    SummaryTable table;
    std::vector<std::string> groups(group_by.begin(), group_by.end());
    if (groups.empty())
        groups = {"algorithm", "n", "d", "K", "level", "b"};

    std::vector<FlatRow> rows;
    std::size_t skipped = 0;
    for (const auto& record : records) {
        if (record.error.has_value()) {
            ++skipped;
            continue;
        }
        if (record.algorithm == "rpkm") {
            for (const auto& step : record.per_step) {
                FlatRow row;
                row.algorithm = record.algorithm;
                row.n = record.n;
                row.d = record.d;
                row.k = record.k;
                row.level = step.level;
                row.dist_evals = static_cast<double>(step.dist_evals);
                row.std_error = step.std_error;
                rows.push_back(std::move(row));
            }
        } else {
            FlatRow row;
            row.algorithm = record.algorithm;
            row.n = record.n;
            row.d = record.d;
            row.k = record.k;
            row.level = 0;
            if (record.algorithm == "mb" && record.params.contains("b"))
                row.b = record.params["b"].get<std::size_t>();
            row.dist_evals = static_cast<double>(record.total_dist_evals);
            row.std_error = record.std_error;
            rows.push_back(std::move(row));
        }
    }
    if (skipped > 0)
        table.warnings.push_back(std::to_string(skipped) +
                                 " failed record(s) skipped");
    if (rows.empty())
        table.warnings.push_back("no usable records; table is empty");

    // Validate columns before building keys.
    for (const auto& column : groups) {
        FlatRow probe;
        key_field(probe, column);
    }

    std::vector<std::pair<std::vector<std::string>, std::vector<const FlatRow*>>>
        grouped;
    for (const auto& row : rows) {
        std::vector<std::string> key;
        key.reserve(groups.size());
        for (const auto& column : groups) key.push_back(key_field(row, column));
        auto it = std::find_if(grouped.begin(), grouped.end(),
                               [&](const auto& g) { return g.first == key; });
        if (it == grouped.end()) {
            grouped.push_back({std::move(key), {}});
            it = std::prev(grouped.end());
        }
        it->second.push_back(&row);
    }
    std::sort(grouped.begin(), grouped.end(),
              [](const auto& a, const auto& b) { return key_less(a.first, b.first); });

    table.columns = groups;
    table.columns.insert(table.columns.end(),
                         {"count", "dist_evals_median", "dist_evals_q1",
                          "dist_evals_q3", "std_error_median", "std_error_q1",
                          "std_error_q3"});
    for (const auto& [key, members] : grouped) {
        std::vector<double> evals;
        std::vector<double> errs;
        for (const auto* row : members) {
            evals.push_back(row->dist_evals);
            if (row->std_error.has_value()) errs.push_back(*row->std_error);
        }
        std::vector<std::string> out = key;
        out.push_back(std::to_string(members.size()));
        out.push_back(format_number(quantile(evals, 0.5)));
        out.push_back(format_number(quantile(evals, 0.25)));
        out.push_back(format_number(quantile(evals, 0.75)));
        if (errs.empty()) {
            std::string name;
            for (std::size_t i = 0; i < key.size(); ++i)
                name += (i ? "/" : "") + key[i];
            table.warnings.push_back("group " + name + ": no std_error values");
            out.insert(out.end(), {"", "", ""});
        } else {
            out.push_back(format_number(quantile(errs, 0.5)));
            out.push_back(format_number(quantile(errs, 0.25)));
            out.push_back(format_number(quantile(errs, 0.75)));
        }
        table.rows.push_back(std::move(out));
    }
    return table;
}

}  // namespace rpkm
