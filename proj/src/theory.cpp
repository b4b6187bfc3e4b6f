#include "rpkm/theory.hpp"

#include <algorithm>
#include <cmath>

namespace rpkm {

namespace {

// Weighted centroid per cluster computed from raw points; clusters without
// members stay at zero and are never referenced by the error sums.
std::vector<double> cluster_means_from_points(
    const Dataset& data, const std::vector<std::uint32_t>& point_label,
    std::uint32_t k) {
    std::vector<double> means(static_cast<std::size_t>(k) * data.d, 0.0);
    std::vector<double> size(k, 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* x = data.points.data() + i * data.d;
        double* c = means.data() + point_label[i] * data.d;
        for (std::size_t j = 0; j < data.d; ++j) c[j] += x[j];
        size[point_label[i]] += 1.0;
    }
    for (std::uint32_t j = 0; j < k; ++j) {
        if (size[j] == 0.0) continue;
        double* c = means.data() + j * data.d;
        for (std::size_t t = 0; t < data.d; ++t) c[t] /= size[j];
    }
    return means;
}

void validate_partition(const Dataset& data, const IndexPartition& p,
                        const char* what) {
    std::vector<char> seen(data.n, 0);
    for (const auto& group : p) {
        if (group.empty())
            throw std::invalid_argument(std::string(what) + ": empty group");
        for (const auto i : group) {
            if (i >= data.n)
                throw std::invalid_argument(std::string(what) +
                                            ": index out of range");
            if (seen[i])
                throw std::invalid_argument(std::string(what) +
                                            ": index appears twice");
            seen[i] = 1;
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw std::invalid_argument(std::string(what) +
                                    ": groups do not cover the dataset");
}

struct GroupStats {
    std::vector<double> means;    // |p| * d
    std::vector<double> weights;  // |p|
};

GroupStats group_stats(const Dataset& data, const IndexPartition& p) {
    GroupStats out;
    out.means.assign(p.size() * data.d, 0.0);
    out.weights.resize(p.size());
    for (std::size_t g = 0; g < p.size(); ++g) {
        double* m = out.means.data() + g * data.d;
        for (const auto i : p[g]) {
            const double* x = data.points.data() + i * data.d;
            for (std::size_t j = 0; j < data.d; ++j) m[j] += x[j];
        }
        out.weights[g] = static_cast<double>(p[g].size());
        for (std::size_t j = 0; j < data.d; ++j) m[j] /= out.weights[g];
    }
    return out;
}

// E over a grid level: weighted error of each cell against the center of
// mass its cluster induces over the level's representatives.
double level_clustering_error(const PartitionLevel& level,
                              const Assignment& labels, std::uint32_t k,
                              DistanceCounter& counter) {
    std::vector<double> centroid(static_cast<std::size_t>(k) * level.dim, 0.0);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < level.cells(); ++i) {
        const double w = static_cast<double>(level.weights[i]);
        const double* m = level.means.data() + i * level.dim;
        double* c = centroid.data() + labels[i] * level.dim;
        for (std::size_t j = 0; j < level.dim; ++j) c[j] += w * m[j];
        mass[labels[i]] += w;
    }
    for (std::uint32_t j = 0; j < k; ++j) {
        if (mass[j] == 0.0) continue;
        double* c = centroid.data() + j * level.dim;
        for (std::size_t t = 0; t < level.dim; ++t) c[t] /= mass[j];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < level.cells(); ++i) {
        const double* m = level.means.data() + i * level.dim;
        const double* c = centroid.data() + labels[i] * level.dim;
        total += static_cast<double>(level.weights[i]) *
                 detail::sq_dist(m, c, level.dim);
    }
    counter.add(level.cells());
    return total;
}

// E over the whole dataset of a clustering given as labels per cell.
double dataset_clustering_error(const Dataset& data,
                                const std::vector<std::size_t>& point_cell,
                                const Assignment& cell_labels, std::uint32_t k,
                                DistanceCounter& counter) {
    std::vector<std::uint32_t> point_label(data.n);
    for (std::size_t i = 0; i < data.n; ++i)
        point_label[i] = cell_labels[point_cell[i]];
    const std::vector<double> means =
        cluster_means_from_points(data, point_label, k);
    double total = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        total += detail::sq_dist(data.points.data() + i * data.d,
                                 means.data() + point_label[i] * data.d, data.d);
    }
    counter.add(data.n);
    return total;
}

void require_history(const RPKMResult& run, const char* what) {
    if (!run.sequence.has_value() || run.histories.size() != run.steps.size())
        throw std::invalid_argument(std::string(what) +
                                    ": run was not executed with record_history");
}

}  // namespace

ClusteringKey canonical_key(const Assignment& labels) {
    ClusteringKey key(labels.size());
    constexpr std::uint32_t kUnset = 0xffffffffu;
    std::vector<std::uint32_t> remap;
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= remap.size()) remap.resize(labels[i] + 1, kUnset);
        if (remap[labels[i]] == kUnset) remap[labels[i]] = next++;
        key[i] = remap[labels[i]];
    }
    return key;
}

Assignment lift_assignment(const PartitionSequence& seq, std::uint32_t from_level,
                           const Assignment& labels, std::uint32_t to_level) {
    if (from_level > to_level)
        throw std::invalid_argument("lift_assignment: target level is coarser");
    const PartitionLevel& coarse = seq.level(from_level);
    const PartitionLevel& fine = seq.level(to_level);
    if (labels.size() != coarse.cells())
        throw std::invalid_argument("lift_assignment: label count mismatch");

    const std::uint32_t shift = to_level - from_level;
    Assignment out(fine.cells());
    std::vector<std::uint32_t> key(fine.dim);
    for (std::size_t i = 0; i < fine.cells(); ++i) {
        const auto c = fine.coords(i);
        for (std::size_t j = 0; j < fine.dim; ++j) key[j] = c[j] >> shift;
        const auto parent = coarse.find_cell(key);
        if (!parent)
            throw std::invalid_argument("lift_assignment: orphan fine cell");
        out[i] = labels[*parent];
    }
    return out;
}

std::vector<std::size_t> point_cells(const Dataset& data,
                                     const PartitionSequence& seq,
                                     std::uint32_t level) {
    // Route through the finest level and shift down, so the mapping agrees
    // with the aggregation path even for points on cell boundaries.
    const std::uint32_t finest = seq.depth();
    const PartitionLevel& lv = seq.level(level);
    const std::uint32_t shift = finest - level;
    std::vector<std::size_t> out(data.n);
    std::vector<std::uint32_t> coords(data.d);
    for (std::size_t i = 0; i < data.n; ++i) {
        const CellIndex idx = cell_index(data.row(i), seq.box, finest);
        for (std::size_t j = 0; j < data.d; ++j) coords[j] = idx.coords[j] >> shift;
        const auto cell = lv.find_cell(coords);
        if (!cell)
            throw std::invalid_argument("point_cells: point maps to no cell");
        out[i] = *cell;
    }
    return out;
}

double lemma1_f(const Dataset& data, const IndexPartition& partition,
                std::span<const double> c) {
    validate_partition(data, partition, "lemma1_f");
    if (c.size() != data.d)
        throw std::invalid_argument("lemma1_f: dimension mismatch");

    std::vector<double> mean(data.d, 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* x = data.points.data() + i * data.d;
        for (std::size_t j = 0; j < data.d; ++j) mean[j] += x[j];
    }
    for (std::size_t j = 0; j < data.d; ++j)
        mean[j] /= static_cast<double>(data.n);

    double f = static_cast<double>(data.n) *
               detail::sq_dist(mean.data(), c.data(), data.d);
    const GroupStats stats = group_stats(data, partition);
    for (std::size_t g = 0; g < partition.size(); ++g) {
        f -= stats.weights[g] *
             detail::sq_dist(stats.means.data() + g * data.d, c.data(), data.d);
    }
    return f;
}

double lemma1_residual(const Dataset& data, const IndexPartition& partition,
                       std::span<const double> c, std::span<const double> c_prime) {
    return std::abs(lemma1_f(data, partition, c) -
                    lemma1_f(data, partition, c_prime));
}

double clustering_error(const Dataset& data, const IndexPartition& p,
                        const Assignment& labels, std::uint32_t k) {
    validate_partition(data, p, "clustering_error");
    if (labels.size() != p.size())
        throw std::invalid_argument("clustering_error: label count mismatch");
    for (const auto lbl : labels)
        if (lbl >= k)
            throw std::invalid_argument("clustering_error: label out of range");

    std::vector<std::uint32_t> point_label(data.n);
    for (std::size_t g = 0; g < p.size(); ++g)
        for (const auto i : p[g]) point_label[i] = labels[g];
    const std::vector<double> means =
        cluster_means_from_points(data, point_label, k);

    const GroupStats stats = group_stats(data, p);
    double total = 0.0;
    for (std::size_t g = 0; g < p.size(); ++g) {
        total += stats.weights[g] *
                 detail::sq_dist(stats.means.data() + g * data.d,
                                 means.data() + labels[g] * data.d, data.d);
    }
    return total;
}

double lemma2_residual(const Dataset& data, const IndexPartition& p,
                       const IndexPartition& p_thinner, const Assignment& g,
                       const Assignment& g_prime, std::uint32_t k) {
    validate_partition(data, p, "lemma2_residual(P)");
    validate_partition(data, p_thinner, "lemma2_residual(P')");

    // Parent group of every point in P, then of every thinner group.
    std::vector<std::size_t> owner(data.n);
    for (std::size_t gi = 0; gi < p.size(); ++gi)
        for (const auto i : p[gi]) owner[i] = gi;

    Assignment g_fine(p_thinner.size()), g_prime_fine(p_thinner.size());
    for (std::size_t r = 0; r < p_thinner.size(); ++r) {
        const std::size_t parent = owner[p_thinner[r][0]];
        for (const auto i : p_thinner[r]) {
            if (owner[i] != parent)
                throw std::invalid_argument(
                    "lemma2_residual: partition is not a refinement");
        }
        if (g.size() != p.size() || g_prime.size() != p.size())
            throw std::invalid_argument("lemma2_residual: label count mismatch");
        g_fine[r] = g[parent];
        g_prime_fine[r] = g_prime[parent];
    }

    const double coarse_diff = clustering_error(data, p, g, k) -
                               clustering_error(data, p, g_prime, k);
    const double fine_diff = clustering_error(data, p_thinner, g_fine, k) -
                             clustering_error(data, p_thinner, g_prime_fine, k);
    return std::abs(coarse_diff - fine_diff);
}

std::vector<Corollary1Check> check_corollary1(const Dataset& data,
                                              const RPKMResult& run,
                                              DistanceCounter& eval_counter,
                                              double rel_tol) {
    require_history(run, "check_corollary1");
    std::vector<Corollary1Check> out;
    const PartitionSequence& seq = *run.sequence;

    for (std::size_t t = 1; t < run.steps.size(); ++t) {
        const RPKMStep& prev = run.steps[t - 1];
        const RPKMStep& cur = run.steps[t];
        const std::uint32_t k = static_cast<std::uint32_t>(cur.centroids.k);

        // Penultimate clustering of each step: index l-1 of G_0..G_l.
        const Assignment& g_prev = run.histories[t - 1][prev.wl_iterations - 1];
        const Assignment& g_cur = run.histories[t][cur.wl_iterations - 1];

        const Assignment g_prev_on_cur =
            lift_assignment(seq, prev.level, g_prev, cur.level);
        const PartitionLevel& level_i = seq.level(cur.level);

        Corollary1Check check;
        check.level = cur.level;
        check.xi = level_clustering_error(level_i, g_prev_on_cur, k, eval_counter) -
                   level_clustering_error(level_i, g_cur, k, eval_counter);

        const auto cells_prev = point_cells(data, seq, prev.level);
        const auto cells_cur = point_cells(data, seq, cur.level);
        const double e_g_prev =
            dataset_clustering_error(data, cells_prev, g_prev, k, eval_counter);
        const double e_g_cur =
            dataset_clustering_error(data, cells_cur, g_cur, k, eval_counter);
        check.err_prev = full_error(data, prev.centroids, eval_counter);
        check.err_cur = full_error(data, cur.centroids, eval_counter);

        check.lhs = e_g_prev - check.err_prev;
        check.rhs = check.xi + (e_g_cur - check.err_cur);

        const double scale =
            1.0 + std::abs(check.err_prev) + std::abs(check.err_cur);
        check.condition_holds = check.lhs <= check.rhs + rel_tol * scale;
        check.descent = check.err_cur <= check.err_prev + rel_tol * scale;
        check.consistent = std::abs((check.rhs - check.lhs) -
                                    (check.err_prev - check.err_cur)) <=
                           rel_tol * scale;
        out.push_back(check);
    }
    return out;
}

WLHistory build_history(const RPKMResult& run) {
    require_history(run, "build_history");
    const PartitionSequence& seq = *run.sequence;
    const std::uint32_t finest = seq.depth();

    WLHistory out;
    for (std::size_t t = 0; t < run.steps.size(); ++t) {
        WLHistory::Step step;
        step.level = run.steps[t].level;
        step.iterations = run.steps[t].wl_iterations;
        step.keys.reserve(run.histories[t].size());
        for (const Assignment& labels : run.histories[t]) {
            step.keys.push_back(canonical_key(
                lift_assignment(seq, step.level, labels, finest)));
        }
        out.steps.push_back(std::move(step));
    }
    return out;
}

RepeatReport detect_clustering_repeats(const WLHistory& history) {
    RepeatReport report;
    const auto& steps = history.steps;

    auto add = [&](std::size_t si, std::size_t r, std::size_t sj, std::size_t s,
                   bool violation, std::string note) {
        report.findings.push_back({si, r, sj, s, violation, std::move(note)});
        if (violation) ++report.violations;
    };

    // Within-step repeats: only a trailing fixed-point plateau is legal, so
    // two equal keys with a different key between them form a cycle.
    for (std::size_t si = 0; si < steps.size(); ++si) {
        const auto& keys = steps[si].keys;
        for (std::size_t r = 1; r < keys.size(); ++r) {
            for (std::size_t s = 0; s < r; ++s) {
                if (keys[s] != keys[r]) continue;
                bool plateau = true;
                for (std::size_t t = s + 1; t < r; ++t) {
                    if (keys[t] != keys[s]) {
                        plateau = false;
                        break;
                    }
                }
                add(si, r, si, s, !plateau,
                    plateau ? "fixed-point plateau" : "within-step cycle");
            }
        }
    }

    // Cross-step repeats of interior clusterings.
    for (std::size_t si = 1; si < steps.size(); ++si) {
        for (std::size_t sj = 0; sj < si; ++sj) {
            for (std::size_t r = 0; r < steps[si].keys.size(); ++r) {
                for (std::size_t s = 0; s < steps[sj].keys.size(); ++s) {
                    if (steps[si].keys[r] != steps[sj].keys[s]) continue;
                    const bool interior_r =
                        r >= 1 && r + 1 <= steps[si].iterations;
                    const bool interior_s =
                        s >= 1 && s + 1 <= steps[sj].iterations;
                    if (!(interior_r && interior_s)) {
                        add(si, r, sj, s, false, "boundary repeat");
                        continue;
                    }
                    bool ones = true;
                    for (std::size_t h = sj + 1; h <= si; ++h)
                        if (steps[h].iterations != 1) ones = false;
                    const bool allowed =
                        ones && s == static_cast<std::size_t>(
                                         steps[sj].iterations - 1);
                    add(si, r, sj, s, !allowed,
                        allowed ? "permitted single-iteration chain"
                                : "interior repeat");
                }
            }
        }
    }
    return report;
}

nlohmann::ordered_json report_to_json(const RepeatReport& report) {
    nlohmann::ordered_json j;
    j["violations"] = report.violations;
    j["findings"] = nlohmann::ordered_json::array();
    for (const auto& f : report.findings) {
        nlohmann::ordered_json entry;
        entry["step_i"] = f.step_i;
        entry["clustering_r"] = f.index_r;
        entry["step_j"] = f.step_j;
        entry["clustering_s"] = f.index_s;
        entry["verdict"] = f.violation ? "violation" : "allowed";
        entry["note"] = f.note;
        j["findings"].push_back(std::move(entry));
    }
    return j;
}

BigInt stirling2(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    if (n == 0) return 1;  // k == 0 here
    if (k == 0) return 0;
    // Row-wise recurrence S(r, c) = c*S(r-1, c) + S(r-1, c-1).
    std::vector<BigInt> row(k + 1, 0);
    row[0] = 1;  // S(0, 0)
    for (std::uint64_t r = 1; r <= n; ++r) {
        const std::uint64_t top = std::min(r, k);
        for (std::uint64_t c = top; c >= 1; --c) row[c] = c * row[c] + row[c - 1];
        row[0] = 0;  // S(r, 0) = 0 for r >= 1
    }
    return row[k];
}

BigInt wl_iteration_bound(std::span<const std::size_t> partition_sizes,
                          std::span<const std::uint32_t> l_history,
                          std::uint32_t k) {
    const std::size_t i = l_history.size();  // bound is for step i+1 (0-based i)
    if (partition_sizes.size() <= i)
        throw std::invalid_argument(
            "wl_iteration_bound: no partition size for the next step");
    if (k == 0)
        throw std::invalid_argument("wl_iteration_bound: k must be positive");
    if (partition_sizes[i] < k)
        throw std::invalid_argument(
            "wl_iteration_bound: partition smaller than k");

    BigInt bound = stirling2(partition_sizes[i], k);
    for (const auto l : l_history) bound -= static_cast<std::int64_t>(l) - 1;
    return bound;
}

std::vector<IterationBoundCheck> check_iteration_bounds(const RPKMResult& run,
                                                        std::size_t max_cells) {
    std::vector<IterationBoundCheck> out;
    std::vector<std::size_t> sizes;
    std::vector<std::uint32_t> ls;
    for (const auto& step : run.steps) {
        IterationBoundCheck check;
        check.level = step.level;
        check.observed = step.wl_iterations;
        sizes.push_back(step.cells);
        if (step.cells <= max_cells) {
            check.bounded = true;
            check.bound = wl_iteration_bound(
                sizes, ls, static_cast<std::uint32_t>(step.centroids.k));
            check.ok = check.bound > 0 && BigInt(check.observed) <= check.bound;
        }
        ls.push_back(step.wl_iterations);
        out.push_back(std::move(check));
    }
    return out;
}

}  // namespace rpkm
