#include "rpkm/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace rpkm {

namespace {

constexpr std::uint32_t kMaxMeanDraws = 10000;

bool parse_double(const std::string& token, double* out) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') return false;
    *out = value;
    return true;
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    if (delimiter == ',') {
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                out.push_back(line.substr(start));
                break;
            }
            out.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
    } else {
        std::istringstream ss(line);
        std::string token;
        while (ss >> token) out.push_back(token);
    }
    return out;
}

// Uniform sample of `take` indices from [0, total) without replacement,
// returned in ascending order.
std::vector<std::size_t> sample_indices(std::size_t total, std::size_t take,
                                        std::mt19937_64& rng) {
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

void set_optional(ordered_json& j, const char* key,
                  const std::optional<double>& value) {
    if (value.has_value()) j[key] = *value;
}

std::optional<double> get_optional(const ordered_json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

}  // namespace

MixtureData generate_mixture(const MixtureSpec& spec) {
    if (spec.n < 1 || spec.d < 1 || spec.components < 1)
        throw std::invalid_argument("generate_mixture: invalid sizes");
    if (spec.n < spec.components)
        throw std::invalid_argument(
            "generate_mixture: fewer points than components");
    if (!(spec.sigma > 0.0))
        throw std::invalid_argument("generate_mixture: sigma must be positive");

    const double side = spec.box_side > 0.0 ? spec.box_side : 20.0 * spec.sigma;
    const double min_sep = spec.min_separation_sigmas * spec.sigma;
    const double min_sep_sq = min_sep * min_sep;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> in_box(0.0, side);

    MixtureData out;
    out.component_means.reserve(spec.components * spec.d);
    std::vector<double> candidate(spec.d);
    std::uint32_t draws = 0;
    std::size_t accepted = 0;
    while (accepted < spec.components) {
        if (draws >= kMaxMeanDraws)
            throw InfeasibleError(
                "generate_mixture: component separation unattainable in the box");
        ++draws;
        for (std::size_t j = 0; j < spec.d; ++j) candidate[j] = in_box(rng);
        bool ok = true;
        for (std::size_t c = 0; c < accepted && ok; ++c) {
            const double dist = detail::sq_dist(
                candidate.data(), out.component_means.data() + c * spec.d, spec.d);
            if (dist < min_sep_sq) ok = false;
        }
        if (!ok) continue;
        out.component_means.insert(out.component_means.end(), candidate.begin(),
                                   candidate.end());
        ++accepted;
    }

    out.data.n = spec.n;
    out.data.d = spec.d;
    out.data.points.resize(spec.n * spec.d);
    out.labels.resize(spec.n);
    std::uniform_int_distribution<std::uint32_t> pick_component(
        0, spec.components - 1);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::uint32_t c = pick_component(rng);
        out.labels[i] = c;
        const double* mean = out.component_means.data() + c * spec.d;
        double* row = out.data.points.data() + i * spec.d;
        for (std::size_t j = 0; j < spec.d; ++j) row[j] = mean[j] + noise(rng);
    }
    return out;
}

Dataset load_csv(const SubsampleSpec& spec, CsvInfo* info) {
    std::ifstream in(spec.path);
    if (!in)
        throw std::runtime_error("load_csv: cannot open " + spec.path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(line);
    }
    if (lines.empty())
        throw std::runtime_error("load_csv: " + spec.path + " has no data");

    const char delimiter =
        lines[0].find(',') != std::string::npos ? ',' : ' ';

    // A first line with any non-numeric field is a header.
    std::size_t first_row = 0;
    bool had_header = false;
    {
        double ignored;
        for (const auto& token : split_line(lines[0], delimiter)) {
            if (!parse_double(token, &ignored)) {
                had_header = true;
                first_row = 1;
                break;
            }
        }
    }
    if (first_row >= lines.size())
        throw std::runtime_error("load_csv: " + spec.path + " has no data rows");

    const std::size_t cols = split_line(lines[first_row], delimiter).size();
    const std::size_t rows = lines.size() - first_row;
    if (cols == 0)
        throw std::runtime_error("load_csv: " + spec.path + " has no columns");

    std::vector<double> table;
    table.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto tokens = split_line(lines[first_row + r], delimiter);
        if (tokens.size() != cols)
            throw std::runtime_error(
                "load_csv: row " + std::to_string(first_row + r + 1) + ": expected " +
                std::to_string(cols) + " columns, found " +
                std::to_string(tokens.size()));
        for (std::size_t c = 0; c < cols; ++c) {
            double value;
            if (!parse_double(tokens[c], &value))
                throw std::runtime_error("load_csv: row " +
                                         std::to_string(first_row + r + 1) +
                                         ", column " + std::to_string(c + 1) +
                                         ": not a number: '" + tokens[c] + "'");
            if (!std::isfinite(value))
                throw std::runtime_error("load_csv: row " +
                                         std::to_string(first_row + r + 1) +
                                         ", column " + std::to_string(c + 1) +
                                         ": non-finite value");
            table.push_back(value);
        }
    }

    const std::size_t n_select = spec.n_select == 0 ? rows : spec.n_select;
    const std::size_t d_select = spec.d_select == 0 ? cols : spec.d_select;
    if (n_select > rows)
        throw std::invalid_argument("load_csv: n_select exceeds available rows");
    if (d_select > cols)
        throw std::invalid_argument("load_csv: d_select exceeds available columns");

    std::mt19937_64 rng(spec.seed);
    const auto row_ids = sample_indices(rows, n_select, rng);
    const auto col_ids = sample_indices(cols, d_select, rng);

    Dataset out;
    out.n = n_select;
    out.d = d_select;
    out.points.reserve(n_select * d_select);
    for (const auto r : row_ids)
        for (const auto c : col_ids) out.points.push_back(table[r * cols + c]);

    if (info) {
        info->delimiter = delimiter;
        info->had_header = had_header;
        info->rows = row_ids;
        info->cols = col_ids;
    }
    return out;
}

ordered_json record_to_json(const RunRecord& record) {
    ordered_json j;
    j["algorithm"] = record.algorithm;
    j["params"] = record.params;
    j["seed"] = record.seed;
    j["n"] = record.n;
    j["d"] = record.d;
    j["K"] = record.k;
    j["per_step"] = ordered_json::array();
    for (const auto& step : record.per_step) {
        ordered_json s;
        s["level"] = step.level;
        s["cells"] = step.cells;
        s["wl_iters"] = step.wl_iters;
        s["dist_evals"] = step.dist_evals;
        s["centroid_error"] = step.centroid_error;
        set_optional(s, "full_error", step.full_error);
        set_optional(s, "std_error", step.std_error);
        s["delta"] = step.delta;
        j["per_step"].push_back(std::move(s));
    }
    j["total_dist_evals"] = record.total_dist_evals;
    j["eval_dist_evals"] = record.eval_dist_evals;
    j["final_error"] = record.final_error;
    set_optional(j, "std_error", record.std_error);
    set_optional(j, "wall_time_ms", record.wall_time_ms);
    if (record.error.has_value()) j["error"] = *record.error;
    return j;
}

RunRecord record_from_json(const ordered_json& j) {
    RunRecord record;
    record.algorithm = j.at("algorithm").get<std::string>();
    record.params = j.at("params");
    record.seed = j.at("seed").get<std::uint64_t>();
    record.n = j.at("n").get<std::size_t>();
    record.d = j.at("d").get<std::size_t>();
    record.k = j.at("K").get<std::uint32_t>();
    for (const auto& s : j.at("per_step")) {
        RunRecord::Step step;
        step.level = s.at("level").get<std::uint32_t>();
        step.cells = s.at("cells").get<std::size_t>();
        step.wl_iters = s.at("wl_iters").get<std::uint32_t>();
        step.dist_evals = s.at("dist_evals").get<std::uint64_t>();
        step.centroid_error = s.at("centroid_error").get<double>();
        step.full_error = get_optional(s, "full_error");
        step.std_error = get_optional(s, "std_error");
        step.delta = s.at("delta").get<double>();
        record.per_step.push_back(std::move(step));
    }
    record.total_dist_evals = j.at("total_dist_evals").get<std::uint64_t>();
    record.eval_dist_evals = j.at("eval_dist_evals").get<std::uint64_t>();
    record.final_error = j.at("final_error").get<double>();
    record.std_error = get_optional(j, "std_error");
    record.wall_time_ms = get_optional(j, "wall_time_ms");
    if (j.contains("error")) record.error = j["error"].get<std::string>();
    return record;
}

void write_run_record(const RunRecord& record, std::ostream& sink) {
    sink << record_to_json(record).dump() << '\n';
    if (!sink)
        throw std::runtime_error("write_run_record: write failed");
}

std::vector<RunRecord> read_run_records(std::istream& source) {
    std::vector<RunRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("read_run_records: line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        records.push_back(record_from_json(j));
    }
    return records;
}

std::vector<RunRecord> read_run_records_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_run_records: cannot open " + path);
    return read_run_records(in);
}

void write_records_csv(const std::vector<RunRecord>& records,
                       std::ostream& sink) {
    const auto number = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const auto optional = [&](const std::optional<double>& v) {
        return v ? number(*v) : std::string();
    };

    sink << "algorithm,seed,n,d,K,level,cells,wl_iters,dist_evals,"
            "centroid_error,full_error,std_error,delta,total_dist_evals,"
            "eval_dist_evals,final_error\n";
    for (const auto& record : records) {
        if (record.error.has_value()) continue;
        for (const auto& step : record.per_step) {
            sink << record.algorithm << ',' << record.seed << ',' << record.n
                 << ',' << record.d << ',' << record.k << ',' << step.level
                 << ',' << step.cells << ',' << step.wl_iters << ','
                 << step.dist_evals << ',' << number(step.centroid_error) << ','
                 << optional(step.full_error) << ',' << optional(step.std_error)
                 << ',' << number(step.delta) << ',' << record.total_dist_evals
                 << ',' << record.eval_dist_evals << ','
                 << number(record.final_error) << '\n';
        }
    }
    if (!sink)
        throw std::runtime_error("write_records_csv: write failed");
}

void write_csv(const Dataset& data, std::ostream& sink) {
    char buf[40];
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* row = data.points.data() + i * data.d;
        for (std::size_t j = 0; j < data.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", row[j]);
            if (j) sink << ',';
            sink << buf;
        }
        sink << '\n';
    }
    if (!sink)
        throw std::runtime_error("write_csv: write failed");
}

}  // namespace rpkm
