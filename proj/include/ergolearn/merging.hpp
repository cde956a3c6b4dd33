#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ergolearn/bayes.hpp"
#include "ergolearn/components.hpp"
#include "ergolearn/core.hpp"
#include "ergolearn/rng.hpp"
#include "ergolearn/version.hpp"

namespace ergolearn {

struct MergingParams {
    double epsilon = 0.05;
    double tail_fraction = 0.5;
    double record_threshold = 0.2;
};

/* Threshold comparisons tolerate 1e-9 of rounding so a distance that is
 * exactly at the threshold on paper cannot flicker across runs. */
inline constexpr double kThresholdSlack = 1e-9;

/// Result of one seeded horizon-N run: per-step predictive distances with
/// running means, the steps where the distance spiked, and the
/// finite-horizon convergence verdict.
struct MergingReport {
    long horizon = 0;
    std::uint64_t seed = 0;
    CesaroTrace trace;
    std::vector<std::pair<long, double>> record_times;  // (step, distance)
    MergeVerdict verdict;
    nlohmann::json metadata;

    double final_cesaro_mean() const { return trace.final_mean(); }
};

/// Steps whose distance reaches the threshold (within kThresholdSlack).
inline std::vector<long> detect_record_times(const std::vector<double>& distances,
                                             double threshold) {
    std::vector<long> out;
    for (std::size_t n = 0; n < distances.size(); ++n)
        if (distances[n] >= threshold - kThresholdSlack) out.push_back(static_cast<long>(n));
    return out;
}

namespace detail {

inline nlohmann::json experiment_metadata(const nlohmann::json& component,
                                          const nlohmann::json& predictor, long horizon,
                                          std::uint64_t seed, const MergingParams& mp) {
    return nlohmann::json{{"component", component},
                          {"predictor", predictor},
                          {"N", horizon},
                          {"seed", seed},
                          {"epsilon", mp.epsilon},
                          {"tail_fraction", mp.tail_fraction},
                          {"record_threshold", mp.record_threshold},
                          {"prng", kPrngId},
                          {"library_version", kLibraryVersion}};
}

inline void check_horizon(long horizon) {
    if (horizon < 1) throw std::invalid_argument("experiment horizon must be >= 1");
}

}  // namespace detail

/// Simulate the component for N steps from its stationary start and compare
/// the predictor's one-step predictive to the component's own at every
/// step, before the outcome is drawn. Deterministic in (specs, N, seed).
inline MergingReport run_merging_experiment(const ComponentSpec& component_spec,
                                            const PredictorSpec& predictor_spec, long horizon,
                                            std::uint64_t seed, const MergingParams& mp = {}) {
    detail::check_horizon(horizon);
    auto component = make_component(component_spec, seed);
    Rng init_rng(seed, Stream::init);
    component->reset(init_rng);
    auto predictor = make_predictor(predictor_spec, *component);

    Rng path_rng(seed, Stream::path);
    std::vector<double> distances(static_cast<std::size_t>(horizon));
    for (long n = 0; n < horizon; ++n) {
        Distribution oracle = component->oracle_predictive();
        Distribution bayes = predictor->predict();
        distances[static_cast<std::size_t>(n)] = sup_distance(bayes, oracle);
        Symbol a = component->sample_step(path_rng);
        component->observe(a);
        predictor->observe(a);
    }

    MergingReport r;
    r.horizon = horizon;
    r.seed = seed;
    r.trace = cesaro_means(distances);
    for (long n : detect_record_times(distances, mp.record_threshold))
        r.record_times.emplace_back(n, distances[static_cast<std::size_t>(n)]);
    r.verdict = full_density_limit_test(r.trace, mp.epsilon, mp.tail_fraction);
    r.metadata = detail::experiment_metadata(component_spec, predictor_spec, horizon, seed, mp);
    return r;
}

/// Failure witness for the pointwise (non-averaged) reading of the distance
/// criterion: predicting a fair i.i.d. coin with the constant (1/2, 1/2)
/// while the comparison target is the realized outcome's point mass. The
/// per-step distance is exactly 1/2 forever: the averaged verdict can never
/// pass, no matter the horizon, and no learning rule could do better
/// against a target that re-randomizes every step.
inline MergingReport dirac_witness_experiment(long horizon, std::uint64_t seed,
                                              const MergingParams& mp = {}) {
    detail::check_horizon(horizon);
    Rng path_rng(seed, Stream::path);
    const Distribution uniform{0.5, 0.5};
    std::vector<double> distances(static_cast<std::size_t>(horizon));
    for (long n = 0; n < horizon; ++n) {
        Symbol a = path_rng.fair_bit() ? 1 : 0;
        distances[static_cast<std::size_t>(n)] = sup_distance(uniform, Distribution::point_mass(2, a));
    }

    MergingReport r;
    r.horizon = horizon;
    r.seed = seed;
    r.trace = cesaro_means(distances);
    for (long n : detect_record_times(distances, mp.record_threshold))
        r.record_times.emplace_back(n, distances[static_cast<std::size_t>(n)]);
    r.verdict = full_density_limit_test(r.trace, mp.epsilon, mp.tail_fraction);
    r.metadata = detail::experiment_metadata(
        nlohmann::json{{"family", "dirac-fair-coin"}, {"parameters", nlohmann::json::object()}, {"seed", seed}},
        nlohmann::json{{"kind", "constant"}, {"parameters", {{"weights", {0.5, 0.5}}}}}, horizon,
        seed, mp);
    return r;
}

/// One (predictive, realized outcome) pair per step, for calibration.
struct PredictionRecord {
    Distribution predictive;
    Symbol outcome;
};

/// Run the predictor against the component and capture every step.
inline std::vector<PredictionRecord> run_prediction_capture(const ComponentSpec& component_spec,
                                                            const PredictorSpec& predictor_spec,
                                                            long horizon, std::uint64_t seed) {
    detail::check_horizon(horizon);
    auto component = make_component(component_spec, seed);
    Rng init_rng(seed, Stream::init);
    component->reset(init_rng);
    auto predictor = make_predictor(predictor_spec, *component);

    Rng path_rng(seed, Stream::path);
    std::vector<PredictionRecord> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (long n = 0; n < horizon; ++n) {
        Distribution pred = predictor->predict();
        Symbol a = component->sample_step(path_rng);
        out.push_back({std::move(pred), a});
        component->observe(a);
        predictor->observe(a);
    }
    return out;
}

struct CalibrationBin {
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;        // steps whose announced probability fell in [lo, hi)
    double frequency = 0.0;  // fraction of those steps on which the symbol occurred
    bool low_confidence = true;  // fewer than 30 samples
};

/// Per-symbol calibration table: for each symbol, steps are bucketed by the
/// announced probability of that symbol and compared with how often it
/// actually occurred. A well-calibrated predictor puts each bin's frequency
/// near its probability range.
struct CalibrationReport {
    double bin_width = 0.1;
    long steps = 0;
    std::vector<std::vector<CalibrationBin>> per_symbol;  // [symbol][bin]
};

inline constexpr long kCalibrationMinSamples = 30;

/// Bucket every step. Bins partition [0, 1]: [j w, (j+1) w) with the final
/// bin closed at 1, so per-symbol counts always sum to the step count.
inline CalibrationReport calibration_test(const std::vector<PredictionRecord>& records,
                                          double bin_width) {
    if (!(bin_width > 0.0 && bin_width <= 1.0))
        throw std::invalid_argument("calibration: bin width must lie in (0, 1]");
    if (records.empty()) throw std::invalid_argument("calibration: no records");
    const std::size_t n_sym = records.front().predictive.size();
    const auto n_bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));

    CalibrationReport rep;
    rep.bin_width = bin_width;
    rep.steps = static_cast<long>(records.size());
    rep.per_symbol.assign(n_sym, std::vector<CalibrationBin>(n_bins));
    std::vector<std::vector<long>> hits(n_sym, std::vector<long>(n_bins, 0));

    for (std::size_t s = 0; s < n_sym; ++s)
        for (std::size_t j = 0; j < n_bins; ++j) {
            rep.per_symbol[s][j].lo = static_cast<double>(j) * bin_width;
            rep.per_symbol[s][j].hi =
                (j + 1 == n_bins) ? 1.0 : static_cast<double>(j + 1) * bin_width;
        }

    for (const auto& rec : records) {
        if (rec.predictive.size() != n_sym)
            throw std::invalid_argument("calibration: records disagree on alphabet size");
        for (std::size_t s = 0; s < n_sym; ++s) {
            double p = rec.predictive.weights()[s];
            auto j = static_cast<std::size_t>(p / bin_width);
            if (j >= n_bins) j = n_bins - 1;  // p = 1 lands in the top bin
            ++rep.per_symbol[s][j].count;
            if (rec.outcome == static_cast<Symbol>(s)) ++hits[s][j];
        }
    }

    for (std::size_t s = 0; s < n_sym; ++s)
        for (std::size_t j = 0; j < n_bins; ++j) {
            CalibrationBin& b = rep.per_symbol[s][j];
            b.frequency = b.count > 0
                              ? static_cast<double>(hits[s][j]) / static_cast<double>(b.count)
                              : 0.0;
            b.low_confidence = b.count < kCalibrationMinSamples;
        }
    return rep;
}

}  // namespace ergolearn
