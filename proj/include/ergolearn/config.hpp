#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergolearn/bayes.hpp"
#include "ergolearn/components.hpp"
#include "ergolearn/decisions.hpp"
#include "ergolearn/version.hpp"

namespace ergolearn::harness {

struct Violation {
    std::string field;
    std::string reason;
};

/// Config rejection. Collects every violated field, not just the first, so
/// one round trip shows the whole repair list.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<Violation> violations)
        : std::runtime_error(render(violations)), violations_(std::move(violations)) {}

    ConfigError(std::string field, std::string reason)
        : ConfigError(std::vector<Violation>{{std::move(field), std::move(reason)}}) {}

    const std::vector<Violation>& violations() const { return violations_; }

    std::vector<std::string> fields() const {
        std::vector<std::string> out;
        for (const auto& vi : violations_) out.push_back(vi.field);
        return out;
    }

    bool names_field(const std::string& f) const {
        for (const auto& vi : violations_)
            if (vi.field == f) return true;
        return false;
    }

private:
    static std::string render(const std::vector<Violation>& v) {
        std::string s = "invalid experiment config:";
        for (const auto& vi : v) s += "\n  " + vi.field + ": " + vi.reason;
        return s;
    }

    std::vector<Violation> violations_;
};

enum class ExperimentKind { merge, calibrate, freq, decide, dirac_witness };

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::merge: return "merge";
        case ExperimentKind::calibrate: return "calibrate";
        case ExperimentKind::freq: return "freq";
        case ExperimentKind::decide: return "decide";
        case ExperimentKind::dirac_witness: return "dirac-witness";
    }
    return "?";
}

inline std::optional<ExperimentKind> parse_kind(const std::string& s) {
    if (s == "merge") return ExperimentKind::merge;
    if (s == "calibrate") return ExperimentKind::calibrate;
    if (s == "freq") return ExperimentKind::freq;
    if (s == "decide") return ExperimentKind::decide;
    if (s == "dirac-witness") return ExperimentKind::dirac_witness;
    return std::nullopt;
}

/// Parsed, validated experiment description. Defaults here are the
/// project-wide ones: epsilon 0.05, tail_fraction 0.5, record threshold
/// 0.2, seed panel {1..20}.
struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    ExperimentKind kind = ExperimentKind::merge;
    std::optional<ComponentSpec> component;
    std::optional<PredictorSpec> predictor;
    long horizon = 0;
    std::vector<std::uint64_t> seeds;
    double epsilon = 0.05;
    double tail_fraction = 0.5;
    double record_threshold = 0.2;
    double bin_width = 0.1;
    int block_length = 3;
    std::optional<nlohmann::json> problem;
    nlohmann::json raw;

    MergingParams merging_params() const { return {epsilon, tail_fraction, record_threshold}; }
};

inline std::vector<std::uint64_t> default_seed_panel() {
    std::vector<std::uint64_t> s;
    for (std::uint64_t k = 1; k <= 20; ++k) s.push_back(k);
    return s;
}

namespace detail {

inline void validate_component_json(const nlohmann::json& j, const std::string& prefix,
                                    std::vector<Violation>& out) {
    if (!j.is_object()) {
        out.push_back({prefix, "must be an object {family, parameters, seed}"});
        return;
    }
    if (!j.contains("family") || !j["family"].is_string()) {
        out.push_back({prefix + ".family", "missing or non-string"});
        return;
    }
    const std::string family = j["family"].get<std::string>();
    const nlohmann::json params =
        j.contains("parameters") ? j["parameters"] : nlohmann::json::object();
    if (!params.is_object()) {
        out.push_back({prefix + ".parameters", "must be an object"});
        return;
    }
    if (j.contains("seed") && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
        out.push_back({prefix + ".seed", "must be a nonnegative integer"});

    auto number_in = [&](const char* name, double lo, bool lo_open, double hi) {
        std::string field = prefix + ".parameters." + name;
        if (!params.contains(name) || !params[name].is_number()) {
            out.push_back({field, "missing or non-numeric"});
            return;
        }
        double x = params[name].get<double>();
        bool ok = lo_open ? (x > lo) : (x >= lo);
        if (!(ok && x <= hi))
            out.push_back({field, "value " + std::to_string(x) + " outside " +
                                      (lo_open ? "(" : "[") + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]"});
    };

    if (family == "bernoulli") {
        number_in("theta", 0.0, false, 1.0);
    } else if (family == "hmm") {
        number_in("p", 0.5, true, 1.0);
        number_in("q", 0.5, true, 1.0);
    } else if (family == "war") {
        // seed is the only knob
    } else if (family == "markov") {
        const std::string field = prefix + ".parameters.transition";
        if (!params.contains("transition") || !params["transition"].is_array() ||
            params["transition"].empty()) {
            out.push_back({field, "missing or not a nonempty array of rows"});
            return;
        }
        const auto& t = params["transition"];
        const std::size_t n = t.size();
        bool shape_ok = n >= 2;
        for (const auto& row : t) {
            if (!row.is_array() || row.size() != n) {
                shape_ok = false;
                break;
            }
            for (const auto& x : row)
                if (!x.is_number() || x.get<double>() < 0.0 || x.get<double>() > 1.0) shape_ok = false;
        }
        if (!shape_ok) {
            out.push_back({field, "must be a square matrix (>= 2 states) of probabilities"});
            return;
        }
        if (params.contains("labels") &&
            (!params["labels"].is_array() || params["labels"].size() != n))
            out.push_back({prefix + ".parameters.labels", "must list one label per state"});
    } else {
        out.push_back({prefix + ".family", "unknown family \"" + family + "\""});
        return;
    }

    if (!out.empty()) return;
    // structural checks passed; catch the deeper model checks (row sums,
    // irreducibility, ...) by actually building the component
    try {
        make_component(j.get<ComponentSpec>());
    } catch (const std::exception& e) {
        out.push_back({prefix, e.what()});
    }
}

inline void validate_predictor_json(const nlohmann::json& j, const std::string& prefix,
                                    std::vector<Violation>& out) {
    if (!j.is_object()) {
        out.push_back({prefix, "must be an object {kind, parameters}"});
        return;
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
        out.push_back({prefix + ".kind", "missing or non-string"});
        return;
    }
    const std::string kind = j["kind"].get<std::string>();
    const nlohmann::json params =
        j.contains("parameters") ? j["parameters"] : nlohmann::json::object();
    if (!params.is_object()) {
        out.push_back({prefix + ".parameters", "must be an object"});
        return;
    }

    if (kind == "oracle" || kind == "exchangeable" || kind == "war_bayes") {
        return;
    }
    if (kind == "mixture") {
        const std::string field = prefix + ".parameters.components";
        if (!params.contains("components") || !params["components"].is_array() ||
            params["components"].empty()) {
            out.push_back({field, "missing or not a nonempty array"});
            return;
        }
        const auto& comps = params["components"];
        for (std::size_t i = 0; i < comps.size(); ++i) {
            if (comps[i].is_object() && comps[i].value("family", "") == "war") {
                out.push_back({field + "[" + std::to_string(i) + "]",
                               "war components cannot be mixture members"});
                continue;
            }
            validate_component_json(comps[i], field + "[" + std::to_string(i) + "]", out);
        }
        if (params.contains("prior")) {
            const std::string pfield = prefix + ".parameters.prior";
            if (!params["prior"].is_array() || params["prior"].size() != comps.size())
                out.push_back({pfield, "must list one weight per component"});
            else {
                double mass = 0.0;
                bool ok = true;
                for (const auto& x : params["prior"]) {
                    if (!x.is_number() || x.get<double>() < 0.0) ok = false;
                    else mass += x.get<double>();
                }
                if (!ok || !(mass > 0.0))
                    out.push_back({pfield, "weights must be nonnegative with positive total"});
            }
        }
        return;
    }
    if (kind == "hmm_grid") {
        if (params.contains("step")) {
            double s = params["step"].is_number() ? params["step"].get<double>() : -1.0;
            if (!(s > 0.0 && s < 0.5))
                out.push_back({prefix + ".parameters.step", "must lie in (0, 1/2)"});
        }
        if (params.contains("points")) {
            const std::string field = prefix + ".parameters.points";
            bool ok = params["points"].is_array() && !params["points"].empty();
            if (ok)
                for (const auto& pt : params["points"]) {
                    if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                        ok = false;
                        break;
                    }
                    double p = pt[0].get<double>(), q = pt[1].get<double>();
                    if (!(p > 0.5 && p <= 1.0 && q > 0.5 && q <= 1.0)) ok = false;
                }
            if (!ok) out.push_back({field, "must be a nonempty list of [p, q] pairs inside (1/2, 1]"});
        }
        return;
    }
    if (kind == "constant") {
        const std::string field = prefix + ".parameters.weights";
        if (!params.contains("weights") || !params["weights"].is_array()) {
            out.push_back({field, "missing or not an array"});
            return;
        }
        try {
            Distribution d(params["weights"].get<std::vector<double>>());
            (void)d;
        } catch (const std::exception& e) {
            out.push_back({field, e.what()});
        }
        return;
    }
    out.push_back({prefix + ".kind", "unknown predictor kind \"" + kind + "\""});
}

inline void validate_problem_json(const nlohmann::json& j, std::size_t alphabet_size,
                                  std::vector<Violation>& out) {
    if (j.is_string()) {
        if (j.get<std::string>() != "matching")
            out.push_back({"problem", "the only named problem is \"matching\""});
        return;
    }
    if (!j.is_object() || !j.contains("payoff")) {
        out.push_back({"problem", "must be \"matching\" or an object with a payoff matrix"});
        return;
    }
    const auto& payoff = j["payoff"];
    bool ok = payoff.is_array() && payoff.size() == alphabet_size;
    std::size_t n_actions = 0;
    if (ok)
        for (const auto& row : payoff) {
            if (!row.is_array() || row.empty()) {
                ok = false;
                break;
            }
            if (n_actions == 0) n_actions = row.size();
            if (row.size() != n_actions) ok = false;
            for (const auto& x : row)
                if (!x.is_number() || x.get<double>() < 0.0 || x.get<double>() > 1.0) ok = false;
        }
    if (!ok) {
        out.push_back({"problem.payoff",
                       "must be one row per alphabet symbol (" + std::to_string(alphabet_size) +
                           "), rectangular, with entries in [0,1]"});
        return;
    }
    if (j.contains("actions") &&
        (!j["actions"].is_array() || j["actions"].size() != n_actions))
        out.push_back({"problem.actions", "must list one name per payoff column"});
}

}  // namespace detail

/// Materialize a decision problem against a concrete alphabet.
inline DecisionProblem build_problem(const nlohmann::json& j, const Alphabet& alpha) {
    if (j.is_string() && j.get<std::string>() == "matching") return matching_problem(alpha);
    auto payoff = j.at("payoff").get<std::vector<std::vector<double>>>();
    std::vector<std::string> actions;
    if (j.contains("actions")) actions = j["actions"].get<std::vector<std::string>>();
    else
        for (std::size_t d = 0; d < payoff.front().size(); ++d)
            actions.push_back("act" + std::to_string(d));
    return DecisionProblem(std::move(actions), std::move(payoff));
}

/// Parse and validate one experiment document. Throws ConfigError listing
/// every violated field.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("(document)", "must be a JSON object");
    std::vector<Violation> v;
    ExperimentConfig cfg;
    cfg.raw = doc;

    if (!doc.contains("schema_version"))
        v.push_back({"schema_version", "missing (mandatory)"});
    else if (!doc["schema_version"].is_number_integer())
        v.push_back({"schema_version", "must be an integer"});
    else if (doc["schema_version"].get<int>() != kSchemaVersion)
        v.push_back({"schema_version", "unsupported version " +
                                           std::to_string(doc["schema_version"].get<int>()) +
                                           ", this build writes version " +
                                           std::to_string(kSchemaVersion)});
    else
        cfg.schema_version = doc["schema_version"].get<int>();

    bool kind_ok = false;
    if (!doc.contains("kind") || !doc["kind"].is_string()) {
        v.push_back({"kind", "missing or non-string"});
    } else if (auto k = parse_kind(doc["kind"].get<std::string>())) {
        cfg.kind = *k;
        kind_ok = true;
    } else {
        v.push_back({"kind", "unknown kind \"" + doc["kind"].get<std::string>() +
                                 "\" (merge | calibrate | freq | decide | dirac-witness)"});
    }

    if (!doc.contains("N") || !doc["N"].is_number_integer())
        v.push_back({"N", "missing or non-integer"});
    else if (doc["N"].get<long long>() < 1)
        v.push_back({"N", "must be >= 1"});
    else
        cfg.horizon = doc["N"].get<long>();

    cfg.seeds = default_seed_panel();
    if (doc.contains("seeds")) {
        bool ok = doc["seeds"].is_array() && !doc["seeds"].empty();
        std::vector<std::uint64_t> seeds;
        if (ok)
            for (const auto& s : doc["seeds"]) {
                if (!s.is_number_integer() || s.get<long long>() < 0) {
                    ok = false;
                    break;
                }
                seeds.push_back(s.get<std::uint64_t>());
            }
        if (!ok) v.push_back({"seeds", "must be a nonempty array of nonnegative integers"});
        else cfg.seeds = std::move(seeds);
    }

    auto optional_number = [&](const char* name, double& slot, double lo, double hi, bool hi_open,
                               const char* range_desc) {
        if (!doc.contains(name)) return;
        double x = doc[name].is_number() ? doc[name].get<double>()
                                         : std::numeric_limits<double>::quiet_NaN();
        bool ok = std::isfinite(x) && x > lo && (hi_open ? x < hi : x <= hi);
        if (!ok) v.push_back({name, std::string("must lie in ") + range_desc});
        else slot = x;
    };
    optional_number("epsilon", cfg.epsilon, 0.0, 1e18, true, "(0, inf)");
    optional_number("tail_fraction", cfg.tail_fraction, 0.0, 1.0, true, "(0, 1)");
    optional_number("record_threshold", cfg.record_threshold, 0.0, 1e18, true, "(0, inf)");
    if (cfg.kind == ExperimentKind::calibrate || doc.contains("bin_width"))
        optional_number("bin_width", cfg.bin_width, 0.0, 1.0, false, "(0, 1]");

    if (doc.contains("block_length")) {
        if (!doc["block_length"].is_number_integer() || doc["block_length"].get<long long>() < 1)
            v.push_back({"block_length", "must be an integer >= 1"});
        else
            cfg.block_length = doc["block_length"].get<int>();
    }
    if (kind_ok && cfg.kind == ExperimentKind::freq && cfg.horizon > 0 &&
        cfg.horizon < cfg.block_length)
        v.push_back({"N", "must be >= block_length for freq experiments"});

    const bool needs_component = kind_ok && cfg.kind != ExperimentKind::dirac_witness;
    const bool needs_predictor =
        kind_ok && (cfg.kind == ExperimentKind::merge || cfg.kind == ExperimentKind::calibrate ||
                    cfg.kind == ExperimentKind::decide);

    bool component_ok = false;
    if (needs_component) {
        if (!doc.contains("component")) {
            v.push_back({"component", std::string("required for kind ") + kind_name(cfg.kind)});
        } else {
            std::size_t before = v.size();
            detail::validate_component_json(doc["component"], "component", v);
            if (v.size() == before) {
                cfg.component = doc["component"].get<ComponentSpec>();
                component_ok = true;
            }
        }
    }

    if (needs_predictor) {
        if (!doc.contains("predictor")) {
            v.push_back({"predictor", std::string("required for kind ") + kind_name(cfg.kind)});
        } else {
            std::size_t before = v.size();
            detail::validate_predictor_json(doc["predictor"], "predictor", v);
            if (v.size() == before) {
                cfg.predictor = doc["predictor"].get<PredictorSpec>();
                if (component_ok) {
                    // pairing check: the predictor must fit the component's alphabet
                    try {
                        auto comp = make_component(*cfg.component);
                        make_predictor(*cfg.predictor, *comp);
                    } catch (const std::exception& e) {
                        v.push_back({"predictor", e.what()});
                    }
                }
            }
        }
    }

    if (kind_ok && cfg.kind == ExperimentKind::decide) {
        if (!doc.contains("problem")) {
            v.push_back({"problem", "required for kind decide"});
        } else if (component_ok) {
            auto comp = make_component(*cfg.component);
            detail::validate_problem_json(doc["problem"], comp->alphabet().size(), v);
            if (v.empty()) cfg.problem = doc["problem"];
        } else {
            cfg.problem = doc["problem"];
        }
    }

    if (!v.empty()) throw ConfigError(std::move(v));
    return cfg;
}

}  // namespace ergolearn::harness
