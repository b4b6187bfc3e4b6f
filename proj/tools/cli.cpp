#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rpkm/bench.hpp"
#include "rpkm/data_io.hpp"

namespace {

int cmd_generate(const rpkm::MixtureSpec& spec, const std::string& out_path,
                 const std::string& labels_path) {
    const rpkm::MixtureData mix = rpkm::generate_mixture(spec);
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot open " << out_path << " for writing\n";
        return 1;
    }
    rpkm::write_csv(mix.data, out);
    if (!labels_path.empty()) {
        std::ofstream labels(labels_path);
        if (!labels) {
            std::cerr << "error: cannot open " << labels_path << " for writing\n";
            return 1;
        }
        for (const auto lbl : mix.labels) labels << lbl << '\n';
    }
    return 0;
}

int cmd_run(const rpkm::ExperimentConfig& config, const std::string& out_path,
            const std::string& csv_out_path) {
    const std::vector<rpkm::RunRecord> records = rpkm::run_experiment(config);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (out_path != "-") {
        file.open(out_path);
        if (!file) {
            std::cerr << "error: cannot open " << out_path << " for writing\n";
            return 1;
        }
        out = &file;
    }
    for (const auto& record : records) rpkm::write_run_record(record, *out);
    out->flush();

    if (!csv_out_path.empty()) {
        std::ofstream csv(csv_out_path);
        if (!csv) {
            std::cerr << "error: cannot open " << csv_out_path << " for writing\n";
            return 1;
        }
        rpkm::write_records_csv(records, csv);
    }

    if (rpkm::any_failed(records)) {
        std::size_t failed = 0;
        for (const auto& r : records)
            if (r.error.has_value()) ++failed;
        std::cerr << failed << " of " << records.size() << " runs failed\n";
        return 2;
    }
    return 0;
}

int cmd_summarize(const std::string& in_path, const std::string& out_path,
                  const std::vector<std::string>& group_by) {
    const auto records = rpkm::read_run_records_file(in_path);
    const rpkm::SummaryTable table = rpkm::summarize(records, group_by);
    for (const auto& warning : table.warnings)
        std::cerr << "warning: " << warning << '\n';

    if (out_path == "-") {
        std::cout << table.to_csv();
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot open " << out_path << " for writing\n";
            return 1;
        }
        out << table.to_csv();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-based RPKM clustering benchmark"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand(
        "generate", "Write a seeded Gaussian-mixture dataset as CSV");
    rpkm::MixtureSpec spec;
    std::string gen_out;
    std::string gen_labels;
    generate->add_option("--n", spec.n, "Number of points")->required();
    generate->add_option("--d", spec.d, "Dimension")->required();
    generate->add_option("--components", spec.components, "Mixture components")
        ->required();
    generate->add_option("--seed", spec.seed, "RNG seed")->required();
    generate->add_option("--sigma", spec.sigma, "Component std-dev");
    generate->add_option("--separation", spec.min_separation_sigmas,
                         "Minimum mean separation, in sigmas");
    generate->add_option("--box-side", spec.box_side,
                         "Mean-sampling hypercube side (0: 20*sigma)");
    generate->add_option("--out", gen_out, "Output CSV path")->required();
    generate->add_option("--labels-out", gen_labels,
                         "Optional path for the true component labels");

    // run
    auto* run = app.add_subcommand("run", "Run a benchmark sweep");
    rpkm::ExperimentConfig config;
    config.algorithms.clear();
    std::string run_out = "-";
    run->add_option("--algorithms", config.algorithms,
                    "Subset of rpkm,kmpp,mb (default: all)")
        ->delimiter(',');
    run->add_option("--n", config.n_list, "Dataset sizes")
        ->delimiter(',')
        ->required();
    run->add_option("--d", config.d_list, "Dimensions")->delimiter(',')->required();
    run->add_option("--K", config.k_list, "Cluster counts")
        ->delimiter(',')
        ->required();
    run->add_option("--m", config.m, "Max grid depth for rpkm");
    run->add_option("--b", config.b_list, "Minibatch sizes")->delimiter(',');
    run->add_option("--t", config.mb_batches, "Minibatch count");
    run->add_option("--replicates", config.replicates, "Replicates per setting");
    run->add_option("--seed", config.seed, "Base seed (mandatory)")->required();
    run->add_option("--out", run_out, "Output JSON-Lines path ('-' for stdout)");
    std::string run_csv_out;
    run->add_option("--csv-out", run_csv_out,
                    "Also write a flat per-step CSV to this path");
    run->add_flag("--evaluation", config.evaluation,
                  "Also compute full-data error and std.error per step");
    std::string csv_path;
    run->add_option("--csv", csv_path,
                    "Subsample this CSV instead of generating mixtures");
    run->add_option("--sigma", config.sigma, "Mixture component std-dev");
    run->add_option("--separation", config.separation_sigmas,
                    "Mixture mean separation, in sigmas");
    run->add_option("--wl-tol", config.wl.rel_tolerance,
                    "Lloyd relative stopping tolerance");
    run->add_option("--wl-max-iters", config.wl.max_iterations,
                    "Lloyd iteration cap");
    run->add_option("--displacement-threshold", config.displacement_threshold,
                    "RPKM early-stop threshold (0 disables)");
    run->add_option("--jobs", config.jobs, "Parallel replicate runners");
    run->add_flag("--timing", config.timing,
                  "Record wall_time_ms (output is no longer byte-reproducible)");

    // summarize
    auto* summarize = app.add_subcommand(
        "summarize", "Aggregate run records into a CSV table");
    std::string sum_in;
    std::string sum_out = "-";
    std::vector<std::string> group_by;
    summarize->add_option("--in", sum_in, "JSON-Lines records path")->required();
    summarize->add_option("--out", sum_out, "Output CSV path ('-' for stdout)");
    summarize
        ->add_option("--group-by", group_by,
                     "Columns from algorithm,n,d,K,level,b")
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(spec, gen_out, gen_labels);
        if (run->parsed()) {
            if (config.algorithms.empty())
                config.algorithms = {"rpkm", "kmpp", "mb"};
            if (!csv_path.empty()) config.csv_path = csv_path;
            config.validate();
            return cmd_run(config, run_out, run_csv_out);
        }
        if (summarize->parsed()) return cmd_summarize(sum_in, sum_out, group_by);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
