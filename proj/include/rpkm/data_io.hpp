#ifndef RPKM_DATA_IO_HPP
#define RPKM_DATA_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rpkm/core.hpp"

namespace rpkm {

using ordered_json = nlohmann::ordered_json;

struct MixtureSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint32_t components = 1;
    std::uint64_t seed = 0;
    double sigma = 1.0;
    double min_separation_sigmas = 4.0;
    double box_side = 0.0;  // 0 means 20 * sigma
};

struct MixtureData {
    Dataset data;
    std::vector<std::uint32_t> labels;   // generating component per point
    std::vector<double> component_means; // components * d, row-major
};

/// Isotropic Gaussian mixture with component means drawn uniformly in a
/// hypercube and re-drawn until all pairwise separations reach
/// min_separation_sigmas * sigma; points pick their component uniformly.
/// Deterministic per seed. Throws InfeasibleError when the separation cannot
/// be met within 10^4 mean draws.
MixtureData generate_mixture(const MixtureSpec& spec);

struct SubsampleSpec {
    std::string path;
    std::size_t d_select = 0;  // 0 selects every column
    std::size_t n_select = 0;  // 0 selects every row
    std::uint64_t seed = 0;
};

struct CsvInfo {
    char delimiter = ',';  // ',' or ' ' (any whitespace)
    bool had_header = false;
    std::vector<std::size_t> rows;  // selected original row numbers, ascending
    std::vector<std::size_t> cols;  // selected original columns, ascending
};

/// Loads a numeric CSV (comma or whitespace delimited, auto-detected; a first
/// line with any non-numeric field is treated as a header) and uniformly
/// subsamples rows and columns without replacement. Parse problems carry the
/// offending row and column in the message.
Dataset load_csv(const SubsampleSpec& spec, CsvInfo* info = nullptr);

/// One benchmark run, serialized as a single JSON-Lines object.
struct RunRecord {
    struct Step {
        std::uint32_t level = 0;
        std::size_t cells = 0;
        std::uint32_t wl_iters = 0;
        std::uint64_t dist_evals = 0;  // cumulative within the run
        double centroid_error = 0.0;
        std::optional<double> full_error;
        std::optional<double> std_error;
        double delta = 0.0;
    };

    std::string algorithm;  // "rpkm", "kmpp" or "mb"
    ordered_json params;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint32_t k = 0;
    std::vector<Step> per_step;
    std::uint64_t total_dist_evals = 0;
    std::uint64_t eval_dist_evals = 0;
    double final_error = 0.0;
    std::optional<double> std_error;
    std::optional<double> wall_time_ms;
    std::optional<std::string> error;  // set when the run failed
};

ordered_json record_to_json(const RunRecord& record);
RunRecord record_from_json(const ordered_json& j);

/// Appends the record as one JSON line with a fixed field order.
void write_run_record(const RunRecord& record, std::ostream& sink);

std::vector<RunRecord> read_run_records(std::istream& source);
std::vector<RunRecord> read_run_records_file(const std::string& path);

/// Flat CSV export of run records, one row per per-step entry, with the
/// header
/// algorithm,seed,n,d,K,level,cells,wl_iters,dist_evals,centroid_error,
/// full_error,std_error,delta,total_dist_evals,eval_dist_evals,final_error.
/// Optional values render as empty cells; failed records are skipped.
void write_records_csv(const std::vector<RunRecord>& records,
                       std::ostream& sink);

/// Writes a dataset as plain CSV ("%.17g" per value, comma separated).
void write_csv(const Dataset& data, std::ostream& sink);

}  // namespace rpkm

#endif  // RPKM_DATA_IO_HPP
