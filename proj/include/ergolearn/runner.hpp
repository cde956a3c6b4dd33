#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ergolearn/config.hpp"
#include "ergolearn/decisions.hpp"
#include "ergolearn/empirical.hpp"
#include "ergolearn/merging.hpp"
#include "ergolearn/version.hpp"

namespace ergolearn::harness {

/// Decimal rendering used for every floating-point CSV cell: 17 significant
/// digits, enough to reproduce the double bit for bit.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
}

/// Write-then-rename so readers never observe a half-written artifact and
/// reruns replace files in one step.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Worker count: `requested` (0 = all hardware threads), then capped by the
/// ERGOLEARN_THREADS environment value when that is a positive integer
/// (0 or unset = no cap).
inline int resolve_thread_count(int requested, unsigned hardware, const char* env_value) {
    int n = requested;
    if (n <= 0) n = hardware > 0 ? static_cast<int>(hardware) : 1;
    if (env_value && *env_value) {
        char* end = nullptr;
        long cap = std::strtol(env_value, &end, 10);
        if (end && *end == '\0' && cap > 0 && cap < n) n = static_cast<int>(cap);
    }
    return n < 1 ? 1 : n;
}

inline int resolve_threads(int requested) {
    return resolve_thread_count(requested, std::thread::hardware_concurrency(),
                                std::getenv("ERGOLEARN_THREADS"));
}

/// Run fn(0..count-1) across up to `threads` workers. Results must be
/// written into preallocated slots by index; artifact bytes then never
/// depend on scheduling. The first worker exception is rethrown.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = static_cast<std::size_t>(threads < 1 ? 1 : threads);
    if (workers > count) workers = count;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

/// Seed panel syntax: comma-separated entries, each a nonnegative integer
/// or an inclusive range "a..b" (e.g. "1..20" or "1,2,7..9").
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    auto parse_u64 = [&](const std::string& tok) {
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("bad seed token \"" + tok + "\" in \"" + text + "\"");
        return std::stoull(tok);
    };
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t dots = tok.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_u64(tok));
        } else {
            std::uint64_t lo = parse_u64(tok.substr(0, dots));
            std::uint64_t hi = parse_u64(tok.substr(dots + 2));
            if (hi < lo) throw std::invalid_argument("bad seed range \"" + tok + "\": end before start");
            for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty seed list");
    return out;
}

struct RunOptions {
    std::filesystem::path out_dir = ".";
    bool quiet = false;
    int threads = 0;  // 0 = auto
    std::optional<std::vector<std::uint64_t>> seeds_override;
};

namespace detail {

inline std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg,
                                                  const RunOptions& opt) {
    return opt.seeds_override ? *opt.seeds_override : cfg.seeds;
}

inline nlohmann::json panel_metadata(const ExperimentConfig& cfg,
                                     const std::vector<std::uint64_t>& seeds) {
    nlohmann::json m{{"N", cfg.horizon},
                     {"seeds", seeds},
                     {"epsilon", cfg.epsilon},
                     {"tail_fraction", cfg.tail_fraction},
                     {"record_threshold", cfg.record_threshold},
                     {"prng", kPrngId},
                     {"library_version", kLibraryVersion}};
    if (cfg.kind == ExperimentKind::dirac_witness) {
        m["component"] = nlohmann::json{{"family", "dirac-fair-coin"},
                                        {"parameters", nlohmann::json::object()},
                                        {"seed", 0}};
        m["predictor"] = nlohmann::json{{"kind", "constant"},
                                        {"parameters", {{"weights", {0.5, 0.5}}}}};
    } else {
        if (cfg.component) m["component"] = *cfg.component;
        if (cfg.predictor) m["predictor"] = *cfg.predictor;
    }
    return m;
}

inline std::string trace_csv(const MergingReport& r) {
    std::string out = "n,d_n,cesaro_mean\n";
    out.reserve(out.size() + r.trace.size() * 48);
    char buf[96];
    for (std::size_t n = 0; n < r.trace.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", n, r.trace.values[n],
                      r.trace.running_means[n]);
        out += buf;
    }
    return out;
}

inline nlohmann::json run_entry(const MergingReport& r, const std::string& trace_file) {
    nlohmann::json records = nlohmann::json::array();
    for (auto [n, d] : r.record_times) records.push_back({n, d});
    return nlohmann::json{{"seed", r.seed},
                          {"final_cesaro_mean", r.final_cesaro_mean()},
                          {"record_times", records},
                          {"record_count", r.record_times.size()},
                          {"verdict", {{"weak", r.verdict.weak}, {"strong", r.verdict.strong}}},
                          {"trace_file", trace_file}};
}

inline nlohmann::json run_merge_like(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto seeds = effective_seeds(cfg, opt);
    std::vector<MergingReport> reports(seeds.size());
    parallel_for(seeds.size(), resolve_threads(opt.threads), [&](std::size_t i) {
        reports[i] = cfg.kind == ExperimentKind::dirac_witness
                         ? dirac_witness_experiment(cfg.horizon, seeds[i], cfg.merging_params())
                         : run_merging_experiment(*cfg.component, *cfg.predictor, cfg.horizon,
                                                  seeds[i], cfg.merging_params());
    });

    nlohmann::json runs = nlohmann::json::array();
    long weak_count = 0, strong_count = 0;
    double mean_final = 0.0, max_final = 0.0, mean_records = 0.0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::string trace_file = "trace_seed" + std::to_string(seeds[i]) + ".csv";
        write_file_atomic(opt.out_dir / trace_file, trace_csv(reports[i]));
        runs.push_back(run_entry(reports[i], trace_file));
        weak_count += reports[i].verdict.weak;
        strong_count += reports[i].verdict.strong;
        double fm = reports[i].final_cesaro_mean();
        mean_final += fm;
        max_final = std::max(max_final, fm);
        mean_records += static_cast<double>(reports[i].record_times.size());
    }
    mean_final /= static_cast<double>(reports.size());
    mean_records /= static_cast<double>(reports.size());

    nlohmann::json summary{
        {"schema_version", kSchemaVersion},
        {"kind", kind_name(cfg.kind)},
        {"metadata", panel_metadata(cfg, seeds)},
        {"runs", runs},
        {"aggregate",
         {{"weak_count", weak_count},
          {"strong_count", strong_count},
          {"mean_final_cesaro_mean", mean_final},
          {"max_final_cesaro_mean", max_final},
          {"mean_record_count", mean_records}}}};
    write_file_atomic(opt.out_dir / "summary.json", summary.dump(2) + "\n");

    if (!opt.quiet) {
        for (std::size_t i = 0; i < reports.size(); ++i)
            std::cout << "seed " << seeds[i]
                      << ": final_cesaro_mean=" << format_double(reports[i].final_cesaro_mean())
                      << " weak=" << (reports[i].verdict.weak ? "true" : "false")
                      << " strong=" << (reports[i].verdict.strong ? "true" : "false")
                      << " records=" << reports[i].record_times.size() << "\n";
        std::cout << "panel: weak " << weak_count << "/" << reports.size() << ", strong "
                  << strong_count << "/" << reports.size()
                  << ", mean final cesaro mean=" << format_double(mean_final) << "\n";
    }
    return summary;
}

inline nlohmann::json run_calibrate(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto seeds = effective_seeds(cfg, opt);
    std::vector<CalibrationReport> reports(seeds.size());
    parallel_for(seeds.size(), resolve_threads(opt.threads), [&](std::size_t i) {
        auto records =
            run_prediction_capture(*cfg.component, *cfg.predictor, cfg.horizon, seeds[i]);
        reports[i] = calibration_test(records, cfg.bin_width);
    });

    auto component = make_component(*cfg.component);
    const Alphabet& alpha = component->alphabet();
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::string file = "calibration_seed" + std::to_string(seeds[i]) + ".csv";
        std::string csv = "symbol,bin_lo,bin_hi,count,frequency,low_confidence\n";
        for (std::size_t s = 0; s < reports[i].per_symbol.size(); ++s)
            for (const CalibrationBin& b : reports[i].per_symbol[s])
                csv += alpha.label(static_cast<Symbol>(s)) + "," + format_double(b.lo) + "," +
                       format_double(b.hi) + "," + std::to_string(b.count) + "," +
                       format_double(b.frequency) + "," + (b.low_confidence ? "true" : "false") +
                       "\n";
        write_file_atomic(opt.out_dir / file, csv);
        runs.push_back({{"seed", seeds[i]}, {"steps", reports[i].steps}, {"table_file", file}});
    }

    nlohmann::json meta = panel_metadata(cfg, seeds);
    meta["bin_width"] = cfg.bin_width;
    nlohmann::json summary{{"schema_version", kSchemaVersion},
                           {"kind", kind_name(cfg.kind)},
                           {"metadata", meta},
                           {"runs", runs}};
    write_file_atomic(opt.out_dir / "summary.json", summary.dump(2) + "\n");
    if (!opt.quiet)
        std::cout << "calibration tables written for " << seeds.size() << " seed(s) under "
                  << opt.out_dir.string() << "\n";
    return summary;
}

inline nlohmann::json run_freq(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto seeds = effective_seeds(cfg, opt);
    struct SeedResult {
        std::string csv;
        std::vector<double> max_gap;  // [k-1]
    };
    std::vector<SeedResult> results(seeds.size());
    parallel_for(seeds.size(), resolve_threads(opt.threads), [&](std::size_t i) {
        auto component = make_component(*cfg.component, seeds[i]);
        Rng init_rng(seeds[i], Stream::init);
        component->reset(init_rng);
        Rng path_rng(seeds[i], Stream::path);
        History h(static_cast<std::size_t>(cfg.horizon));
        for (long n = 0; n < cfg.horizon; ++n) {
            Symbol a = component->sample_step(path_rng);
            component->observe(a);
            h[static_cast<std::size_t>(n)] = a;
        }
        const Alphabet& alpha = component->alphabet();
        std::string csv = "block,frequency,exact,gap\n";
        for (int k = 1; k <= cfg.block_length; ++k) {
            BlockFrequencyTable table = block_frequencies(h, k);
            double worst = 0.0;
            for (const History& b : enumerate_blocks(alpha.size(), k)) {
                double freq = table.frequency(b);
                double exact = component->exact_block_probability(b);
                double gap = std::abs(freq - exact);
                worst = std::max(worst, gap);
                std::string label;
                for (Symbol a : b) label += alpha.label(a);
                csv += label + "," + format_double(freq) + "," + format_double(exact) + "," +
                       format_double(gap) + "\n";
            }
            results[i].max_gap.push_back(worst);
        }
        results[i].csv = std::move(csv);
    });

    nlohmann::json runs = nlohmann::json::array();
    std::vector<double> per_k_worst(static_cast<std::size_t>(cfg.block_length), 0.0);
    for (std::size_t i = 0; i < results.size(); ++i) {
        std::string file = "freq_seed" + std::to_string(seeds[i]) + ".csv";
        write_file_atomic(opt.out_dir / file, results[i].csv);
        nlohmann::json gaps = nlohmann::json::object();
        for (int k = 1; k <= cfg.block_length; ++k) {
            double g = results[i].max_gap[static_cast<std::size_t>(k - 1)];
            gaps[std::to_string(k)] = g;
            per_k_worst[static_cast<std::size_t>(k - 1)] =
                std::max(per_k_worst[static_cast<std::size_t>(k - 1)], g);
        }
        runs.push_back({{"seed", seeds[i]}, {"table_file", file}, {"max_gap", gaps}});
    }
    nlohmann::json aggregate = nlohmann::json::object();
    double overall = 0.0;
    for (int k = 1; k <= cfg.block_length; ++k) {
        aggregate["max_gap_k" + std::to_string(k)] = per_k_worst[static_cast<std::size_t>(k - 1)];
        overall = std::max(overall, per_k_worst[static_cast<std::size_t>(k - 1)]);
    }
    aggregate["max_gap"] = overall;

    nlohmann::json meta = panel_metadata(cfg, seeds);
    meta["block_length"] = cfg.block_length;
    nlohmann::json summary{{"schema_version", kSchemaVersion},
                           {"kind", kind_name(cfg.kind)},
                           {"metadata", meta},
                           {"runs", runs},
                           {"aggregate", aggregate}};
    write_file_atomic(opt.out_dir / "summary.json", summary.dump(2) + "\n");
    if (!opt.quiet)
        std::cout << "block tables written for " << seeds.size()
                  << " seed(s); worst |frequency - exact| = " << format_double(overall) << "\n";
    return summary;
}

inline nlohmann::json run_decide(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto seeds = effective_seeds(cfg, opt);
    auto component = make_component(*cfg.component);
    DecisionProblem prob = build_problem(*cfg.problem, component->alphabet());
    OptimalityGap result =
        epsilon_optimality_gap(*cfg.predictor, *cfg.component, prob, cfg.horizon, seeds);

    nlohmann::json summary{
        {"schema_version", kSchemaVersion},
        {"kind", kind_name(cfg.kind)},
        {"problem", {{"actions", prob.actions}, {"payoff", prob.payoff}}},
        {"belief", *cfg.predictor},
        {"truth", *cfg.component},
        {"N", cfg.horizon},
        {"seeds", seeds},
        {"V_belief", result.belief.mean},
        {"V_oracle", result.oracle.mean},
        {"gap", result.gap},
        {"per_seed",
         {{"V_belief", result.belief.per_seed}, {"V_oracle", result.oracle.per_seed}}},
        {"metadata", {{"prng", kPrngId}, {"library_version", kLibraryVersion}}}};
    write_file_atomic(opt.out_dir / "summary.json", summary.dump(2) + "\n");
    if (!opt.quiet)
        std::cout << "V_belief=" << format_double(result.belief.mean)
                  << " V_oracle=" << format_double(result.oracle.mean)
                  << " gap=" << format_double(result.gap) << "\n";
    return summary;
}

}  // namespace detail

/// Execute one validated experiment config, writing every artifact under
/// out_dir. Returns the summary document (also written as summary.json).
/// Byte-identical inputs give byte-identical artifacts regardless of worker
/// count.
inline nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    std::filesystem::create_directories(opt.out_dir);
    switch (cfg.kind) {
        case ExperimentKind::merge:
        case ExperimentKind::dirac_witness: return detail::run_merge_like(cfg, opt);
        case ExperimentKind::calibrate: return detail::run_calibrate(cfg, opt);
        case ExperimentKind::freq: return detail::run_freq(cfg, opt);
        case ExperimentKind::decide: return detail::run_decide(cfg, opt);
    }
    throw std::logic_error("unreachable experiment kind");
}

/// Sample paths only: one CSV per seed with the realized outcome labels.
inline nlohmann::json run_simulate(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (!cfg.component)
        throw ConfigError("component", "simulate needs a component (dirac-witness has none)");
    std::filesystem::create_directories(opt.out_dir);
    const auto seeds = detail::effective_seeds(cfg, opt);
    std::vector<std::string> csvs(seeds.size());
    parallel_for(seeds.size(), resolve_threads(opt.threads), [&](std::size_t i) {
        auto component = make_component(*cfg.component, seeds[i]);
        Rng init_rng(seeds[i], Stream::init);
        component->reset(init_rng);
        Rng path_rng(seeds[i], Stream::path);
        std::string csv = "n,symbol\n";
        csv.reserve(static_cast<std::size_t>(cfg.horizon) * 8 + 16);
        for (long n = 0; n < cfg.horizon; ++n) {
            Symbol a = component->sample_step(path_rng);
            component->observe(a);
            csv += std::to_string(n) + "," + component->alphabet().label(a) + "\n";
        }
        csvs[i] = std::move(csv);
    });

    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        std::string file = "path_seed" + std::to_string(seeds[i]) + ".csv";
        write_file_atomic(opt.out_dir / file, csvs[i]);
        runs.push_back({{"seed", seeds[i]}, {"path_file", file}});
    }
    nlohmann::json summary{{"schema_version", kSchemaVersion},
                           {"kind", "simulate"},
                           {"metadata",
                            {{"component", *cfg.component},
                             {"N", cfg.horizon},
                             {"seeds", seeds},
                             {"prng", kPrngId},
                             {"library_version", kLibraryVersion}}},
                           {"runs", runs}};
    write_file_atomic(opt.out_dir / "summary.json", summary.dump(2) + "\n");
    if (!opt.quiet)
        std::cout << seeds.size() << " path(s) of length " << cfg.horizon << " written under "
                  << opt.out_dir.string() << "\n";
    return summary;
}

/// Merge per-experiment summaries into one overview CSV. Every input must
/// carry this build's schema version; a mismatch aborts with both versions
/// named.
inline std::string consolidate_report(const std::vector<std::filesystem::path>& summary_files) {
    std::string csv = "kind,truth,N,seeds,final_cesaro_mean,weak,strong,records,gap\n";
    for (const auto& file : summary_files) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot read summary file " + file.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error("cannot parse " + file.string() + ": " + e.what());
        }
        const int sv = j.value("schema_version", -1);
        if (sv != kSchemaVersion)
            throw std::runtime_error("schema version mismatch: " + file.string() + " carries " +
                                     std::to_string(sv) + ", this build reads " +
                                     std::to_string(kSchemaVersion));
        const std::string kind = j.value("kind", "?");

        std::string truth = "-", n_str = "-", seeds_str = "-";
        std::string final_mean = "", weak = "", strong = "", records = "", gap = "";
        if (kind == "decide") {
            truth = describe_component(j.at("truth").get<ComponentSpec>());
            n_str = std::to_string(j.at("N").get<long>());
            seeds_str = std::to_string(j.at("seeds").size());
            gap = format_double(j.at("gap").get<double>());
        } else {
            const auto& meta = j.at("metadata");
            if (meta.contains("component"))
                truth = describe_component(meta["component"].get<ComponentSpec>());
            n_str = std::to_string(meta.at("N").get<long>());
            seeds_str = std::to_string(meta.at("seeds").size());
            if (j.contains("aggregate") && j["aggregate"].contains("mean_final_cesaro_mean")) {
                const auto& agg = j["aggregate"];
                final_mean = format_double(agg["mean_final_cesaro_mean"].get<double>());
                long total = static_cast<long>(j.at("runs").size());
                auto verdict_cell = [&](long count) {
                    if (count == total) return std::string("true");
                    if (count == 0) return std::string("false");
                    return std::to_string(count) + "/" + std::to_string(total);
                };
                weak = verdict_cell(agg["weak_count"].get<long>());
                strong = verdict_cell(agg["strong_count"].get<long>());
                records = format_double(agg["mean_record_count"].get<double>());
            }
        }
        csv += kind + "," + truth + "," + n_str + "," + seeds_str + "," + final_mean + "," + weak +
               "," + strong + "," + records + "," + gap + "\n";
    }
    return csv;
}

}  // namespace ergolearn::harness
