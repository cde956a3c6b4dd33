#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergolearn/ergolearn.hpp"

namespace {

using ergolearn::harness::ConfigError;
using ergolearn::harness::ExperimentConfig;
using ergolearn::harness::ExperimentKind;
using ergolearn::harness::RunOptions;

/* Errors leave as one JSON object on stderr so driving scripts never have
 * to scrape free-form text. */
void emit_error(const std::string& type, const std::vector<std::string>& fields,
                const std::string& message) {
    nlohmann::json err{{"error", {{"type", type}, {"fields", fields}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::string seeds;
    bool quiet = false;
    int threads = 0;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory (default: current directory)");
    cmd->add_option("--seeds", args.seeds,
                    "seed panel override, e.g. \"1..20\" or \"3,5,9\" (default: config seeds)");
    cmd->add_flag("--quiet", args.quiet, "suppress progress lines on stdout");
    cmd->add_option("--threads", args.threads,
                    "worker threads, 0 = auto (ERGOLEARN_THREADS caps the count)");
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("(document)", std::string("not parseable as JSON: ") + e.what());
    }
    return ergolearn::harness::parse_config(doc);
}

RunOptions make_options(const CommonArgs& args) {
    RunOptions opt;
    opt.out_dir = args.out_dir;
    opt.quiet = args.quiet;
    opt.threads = args.threads;
    if (!args.seeds.empty()) opt.seeds_override = ergolearn::harness::parse_seed_list(args.seeds);
    return opt;
}

void require_kind(const ExperimentConfig& cfg, std::initializer_list<ExperimentKind> allowed,
                  const std::string& command) {
    for (ExperimentKind k : allowed)
        if (cfg.kind == k) return;
    std::string names;
    for (ExperimentKind k : allowed) {
        if (!names.empty()) names += " | ";
        names += ergolearn::harness::kind_name(k);
    }
    throw ConfigError("kind", "command \"" + command + "\" needs kind " + names + ", config says \"" +
                                  ergolearn::harness::kind_name(cfg.kind) + "\"");
}

int run_command(const CommonArgs& args, const std::string& command) {
    ExperimentConfig cfg = load_config(args.config_path);
    if (command == "simulate") {
        // any kind that names a component can be path-sampled
        ergolearn::harness::run_simulate(cfg, make_options(args));
        return 0;
    }
    if (command == "merge-report")
        require_kind(cfg, {ExperimentKind::merge, ExperimentKind::dirac_witness}, command);
    else if (command == "calibrate")
        require_kind(cfg, {ExperimentKind::calibrate}, command);
    else if (command == "freq")
        require_kind(cfg, {ExperimentKind::freq}, command);
    else if (command == "decide")
        require_kind(cfg, {ExperimentKind::decide}, command);
    ergolearn::harness::run_experiment(cfg, make_options(args));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergolearn: prediction experiments on stationary stochastic processes"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* simulate = app.add_subcommand("simulate", "sample paths from the configured component");
    CLI::App* merge = app.add_subcommand(
        "merge-report", "per-step predictive distances, running means, records and verdicts");
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "announced-probability vs realized-frequency tables");
    CLI::App* freq =
        app.add_subcommand("freq", "empirical block frequencies against the exact block law");
    CLI::App* decide =
        app.add_subcommand("decide", "realized decision value of a belief vs the oracle");
    for (CLI::App* cmd : {simulate, merge, calibrate, freq, decide}) add_common_options(cmd, args);

    CLI::App* report =
        app.add_subcommand("report", "consolidate summary.json files into one overview CSV");
    std::vector<std::string> summary_files;
    std::string report_out;
    report->add_option("summaries", summary_files, "summary.json files to consolidate")
        ->required()
        ->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "write the CSV here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            std::vector<std::filesystem::path> files(summary_files.begin(), summary_files.end());
            std::string csv = ergolearn::harness::consolidate_report(files);
            if (report_out.empty())
                std::cout << csv;
            else
                ergolearn::harness::write_file_atomic(report_out, csv);
            return 0;
        }
        for (CLI::App* cmd : {simulate, merge, calibrate, freq, decide})
            if (cmd->parsed()) return run_command(args, cmd->get_name());
        return 0;
    } catch (const ConfigError& e) {
        emit_error("validation", e.fields(), e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        emit_error("validation", {}, e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("runtime", {}, e.what());
        return 2;
    }
}
