#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ergolearn/components.hpp"
#include "ergolearn/core.hpp"

namespace ergolearn {

/// Thrown when an observed history has probability zero under every
/// component of a mixture. Carries the length of the first impossible
/// prefix.
class InconsistentObservation : public std::runtime_error {
public:
    explicit InconsistentObservation(long prefix_len)
        : std::runtime_error("inconsistent observation: history prefix of length " +
                             std::to_string(prefix_len) +
                             " has zero probability under every component"),
          prefix_length(prefix_len) {}

    long prefix_length;
};

/// One-step-ahead predictor advanced outcome by outcome.
class SequentialPredictor {
public:
    virtual ~SequentialPredictor() = default;
    virtual Distribution predict() const = 0;
    virtual void observe(Symbol a) = 0;
};

/* ---- uniform mixture of coins ---- */

/// Sufficient statistics of the uniform-over-theta coin mixture: n
/// observations, d of them equal to 1.
struct ExchangeablePosterior {
    long n = 0;
    long d = 0;

    bool operator==(const ExchangeablePosterior&) const = default;
};

/// Predictive of the uniform coin mixture: P(next = 1) = (d+1)/(n+2), the
/// rule of succession. Equals the ratio of consecutive block probabilities
/// 1/((n+1) C(n,d)) under the mixture law.
inline Distribution exchangeable_predictive(const ExchangeablePosterior& post) {
    if (post.n < 0 || post.d < 0 || post.d > post.n)
        throw std::domain_error("exchangeable posterior: counts out of range (n=" +
                                std::to_string(post.n) + ", d=" + std::to_string(post.d) + ")");
    double p1 = static_cast<double>(post.d + 1) / static_cast<double>(post.n + 2);
    return Distribution{1.0 - p1, p1};
}

inline ExchangeablePosterior exchangeable_step(ExchangeablePosterior post, Symbol a) {
    if (a != 0 && a != 1) throw std::domain_error("exchangeable posterior: outcome must be 0 or 1");
    ++post.n;
    if (a == 1) ++post.d;
    return post;
}

inline void to_json(nlohmann::json& j, const ExchangeablePosterior& p) {
    j = nlohmann::json{{"n", p.n}, {"d", p.d}};
}

inline void from_json(const nlohmann::json& j, ExchangeablePosterior& p) {
    p.n = j.at("n").get<long>();
    p.d = j.at("d").get<long>();
}

class ExchangeablePredictor final : public SequentialPredictor {
public:
    Distribution predict() const override { return exchangeable_predictive(post_); }
    void observe(Symbol a) override { post_ = exchangeable_step(post_, a); }
    const ExchangeablePosterior& posterior() const { return post_; }

private:
    ExchangeablePosterior post_;
};

/* ---- finite decompositions ---- */

/// Finite parameter set with prior weights; each parameter names one
/// component law. All components must share one alphabet.
struct Decomposition {
    std::vector<ComponentSpec> components;
    std::vector<double> prior;
};

/// Validating constructor; normalizes the prior.
inline Decomposition make_decomposition(std::vector<ComponentSpec> components,
                                        std::vector<double> prior) {
    if (components.empty()) throw std::invalid_argument("decomposition: no components");
    if (prior.empty()) {
        prior.assign(components.size(), 1.0 / static_cast<double>(components.size()));
    }
    if (prior.size() != components.size())
        throw std::invalid_argument("decomposition: prior length " + std::to_string(prior.size()) +
                                    " does not match component count " +
                                    std::to_string(components.size()));
    double s = 0.0;
    for (double w : prior) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("decomposition: prior weights must be nonnegative");
        s += w;
    }
    if (!(s > 0.0)) throw std::invalid_argument("decomposition: prior has no mass");
    for (double& w : prior) w /= s;
    return Decomposition{std::move(components), std::move(prior)};
}

inline void to_json(nlohmann::json& j, const Decomposition& d) {
    j = nlohmann::json{{"components", d.components}, {"prior", d.prior}};
}

inline void from_json(const nlohmann::json& j, Decomposition& d) {
    d = make_decomposition(j.at("components").get<std::vector<ComponentSpec>>(),
                           j.value("prior", std::vector<double>{}));
}

inline double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Exact Bayes over a finite decomposition: one log weight and one live
/// filter (the component's own conditional law) per parameter. Observing a
/// multiplies each weight by that component's one-step probability of a;
/// weights are renormalized in log space every step, so long losing streaks
/// only ever underflow to -inf, never to NaN.
class MixturePosterior final : public SequentialPredictor {
public:
    explicit MixturePosterior(const Decomposition& dec) {
        if (dec.components.empty()) throw std::invalid_argument("mixture: empty decomposition");
        components_.reserve(dec.components.size());
        log_w_.reserve(dec.components.size());
        for (std::size_t i = 0; i < dec.components.size(); ++i) {
            if (dec.components[i].family == "war")
                throw std::invalid_argument(
                    "mixture: war components have a dedicated posterior and cannot be mixture members");
            components_.push_back(make_component(dec.components[i]));
            if (components_[i]->alphabet() != components_[0]->alphabet())
                throw std::invalid_argument("mixture: components disagree on the alphabet");
            log_w_.push_back(dec.prior[i] > 0.0 ? std::log(dec.prior[i])
                                                : -std::numeric_limits<double>::infinity());
        }
    }

    const Alphabet& alphabet() const { return components_[0]->alphabet(); }

    Distribution predict() const override {
        std::vector<double> acc(alphabet().size(), 0.0);
        for (std::size_t i = 0; i < components_.size(); ++i) {
            double w = std::exp(log_w_[i]);
            if (w <= 0.0) continue;
            Distribution p = components_[i]->oracle_predictive();
            for (std::size_t a = 0; a < acc.size(); ++a) acc[a] += w * p.weights()[a];
        }
        return Distribution::normalized(std::move(acc));
    }

    void observe(Symbol a) override {
        if (!alphabet().contains(a))
            throw std::domain_error("mixture: observed symbol outside alphabet");
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (!std::isfinite(log_w_[i])) continue;
            double lik = components_[i]->oracle_predictive()[a];
            if (lik > 0.0) {
                log_w_[i] += std::log(lik);
                components_[i]->observe(a);
            } else {
                log_w_[i] = -std::numeric_limits<double>::infinity();
            }
        }
        ++steps_;
        double z = log_sum_exp(log_w_);
        if (!std::isfinite(z)) throw InconsistentObservation(steps_);
        for (double& lw : log_w_) lw -= z;
    }

    const std::vector<double>& log_weights() const { return log_w_; }

    std::vector<double> posterior_weights() const {
        std::vector<double> w(log_w_.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w_[i]);
        return w;
    }

    long steps() const { return steps_; }

private:
    std::vector<std::unique_ptr<Component>> components_;
    std::vector<double> log_w_;
    long steps_ = 0;
};

/// Predictive after replaying `history` from the prior.
inline Distribution mixture_predictive(const Decomposition& dec, const History& history) {
    MixturePosterior post(dec);
    for (Symbol a : history) post.observe(a);
    return post.predict();
}

/* ---- posterior over a (p, q) grid for the noisy-persistence chain ---- */

/// Grid posterior state: one (p, q) point, one log weight and one forward
/// filter per entry. log_weights stay normalized (logsumexp = 0 up to
/// rounding) after every step.
struct GridPosterior {
    std::vector<std::pair<double, double>> grid;
    std::vector<double> log_weights;
    std::vector<double> filter_g;
};

/// Axis values for the default grid: multiples of `step` strictly inside
/// (1/2, 1). Step 0.02 gives {0.52, 0.54, ..., 0.98}.
inline std::vector<double> grid_axis(double step) {
    if (!(step > 0.0 && step < 0.5)) throw std::domain_error("grid step must lie in (0, 1/2)");
    std::vector<double> v;
    for (long k = static_cast<long>(0.5 / step) + 1;
         static_cast<double>(k) * step < 1.0 - 1e-12; ++k) {
        double x = static_cast<double>(k) * step;
        if (x > 0.5 + 1e-12) v.push_back(x);
    }
    if (v.empty()) throw std::domain_error("grid step leaves no points inside (1/2, 1)");
    return v;
}

/// Uniform-prior posterior over an explicit point set; filters start at the
/// stationary hidden law.
inline GridPosterior make_grid_posterior(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw std::invalid_argument("grid posterior: no points");
    for (auto& [p, q] : points) check_persistence_params(p, q);
    GridPosterior gp;
    const double lw = -std::log(static_cast<double>(points.size()));
    gp.log_weights.assign(points.size(), lw);
    gp.filter_g.assign(points.size(), 0.5);
    gp.grid = std::move(points);
    return gp;
}

/// Uniform-prior posterior over the square grid with the given step.
inline GridPosterior make_grid_posterior(double step = 0.02) {
    std::vector<double> ax = grid_axis(step);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(ax.size() * ax.size());
    for (double p : ax)
        for (double q : ax) pts.emplace_back(p, q);
    return make_grid_posterior(std::move(pts));
}

/// Posterior-mixture one-step predictive over {B, G}.
inline Distribution grid_predictive(const GridPosterior& gp) {
    double pg = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < gp.grid.size(); ++i) {
        double w = std::exp(gp.log_weights[i]);
        if (w <= 0.0) continue;
        pg += w * hmm_one_step_predictive(gp.filter_g[i], gp.grid[i].first, gp.grid[i].second);
        mass += w;
    }
    if (!(mass > 0.0)) throw std::domain_error("grid posterior: no surviving mass");
    return Distribution::normalized({mass - pg, pg});
}

/// Pure step: fold one observed outcome (0 = B, 1 = G) into weights and
/// filters. Grid points that assign the outcome zero probability drop to
/// weight -inf and are never revived.
inline GridPosterior grid_posterior_step(GridPosterior gp, Symbol a) {
    if (a != 0 && a != 1) throw std::domain_error("grid posterior: outcome must be 0 or 1");
    for (std::size_t i = 0; i < gp.grid.size(); ++i) {
        if (!std::isfinite(gp.log_weights[i])) continue;
        HmmFilterStep s = hmm_filter_step(gp.filter_g[i], a, gp.grid[i].first, gp.grid[i].second);
        if (s.likelihood > 0.0) {
            gp.log_weights[i] += std::log(s.likelihood);
            gp.filter_g[i] = s.filter_g;
        } else {
            gp.log_weights[i] = -std::numeric_limits<double>::infinity();
        }
    }
    double z = log_sum_exp(gp.log_weights);
    if (!std::isfinite(z)) throw InconsistentObservation(0);
    for (double& lw : gp.log_weights) lw -= z;
    return gp;
}

inline void to_json(nlohmann::json& j, const GridPosterior& gp) {
    j = nlohmann::json{{"grid", gp.grid}, {"log_weights", gp.log_weights}, {"filter_g", gp.filter_g}};
}

inline void from_json(const nlohmann::json& j, GridPosterior& gp) {
    gp.grid = j.at("grid").get<std::vector<std::pair<double, double>>>();
    gp.log_weights = j.at("log_weights").get<std::vector<double>>();
    gp.filter_g = j.at("filter_g").get<std::vector<double>>();
    if (gp.log_weights.size() != gp.grid.size() || gp.filter_g.size() != gp.grid.size())
        throw std::invalid_argument("grid posterior: field lengths disagree");
}

class GridPredictor final : public SequentialPredictor {
public:
    explicit GridPredictor(GridPosterior gp) : gp_(std::move(gp)) {}
    explicit GridPredictor(double step) : gp_(make_grid_posterior(step)) {}

    Distribution predict() const override { return grid_predictive(gp_); }
    void observe(Symbol a) override {
        try {
            gp_ = grid_posterior_step(std::move(gp_), a);
        } catch (const InconsistentObservation&) {
            throw InconsistentObservation(steps_ + 1);
        }
        ++steps_;
    }
    const GridPosterior& posterior() const { return gp_; }

private:
    GridPosterior gp_;
    long steps_ = 0;
};

/* ---- war process posterior ---- */

/// Everything the observer of the war process has pinned down: theta values
/// deduced from post-war peaceful runs, the current gap once a war has been
/// seen, and the raw pre-war prefix (it constrains theta only at unknown
/// offsets, so it is stored, not interpreted).
struct WarPosterior {
    std::map<long, Symbol> learned;
    std::optional<long> gap;
    History pre_war;

    bool operator==(const WarPosterior&) const = default;
};

/// Predictive over {W, B, G}: wars are fair coin flips forever, so W always
/// carries 1/2. When the gap is known and theta(gap + 1) has been deduced,
/// the peaceful half concentrates there; otherwise it splits evenly into
/// (W: 1/2, B: 1/4, G: 1/4).
inline Distribution war_bayes_predictive(const WarPosterior& wp) {
    if (wp.gap) {
        auto it = wp.learned.find(*wp.gap + 1);
        if (it != wp.learned.end()) {
            std::vector<double> w(3, 0.0);
            w[0] = 0.5;
            w[static_cast<std::size_t>(it->second)] = 0.5;
            return Distribution(std::move(w));
        }
    }
    return Distribution{0.5, 0.25, 0.25};
}

/// Pure step. A war outcome resets the gap; a peaceful outcome advances it
/// and pins theta there. A peaceful outcome contradicting an already
/// deduced theta value is impossible under the model and is refused.
inline WarPosterior war_posterior_step(WarPosterior wp, Symbol a) {
    if (a < 0 || a > 2) throw std::domain_error("war posterior: outcome must be 0 (W), 1 (B) or 2 (G)");
    if (a == WarComponent::kWar) {
        wp.gap = 0;
        return wp;
    }
    if (!wp.gap) {
        wp.pre_war.push_back(a);
        return wp;
    }
    const long idx = *wp.gap + 1;
    auto [it, inserted] = wp.learned.try_emplace(idx, a);
    if (!inserted && it->second != a)
        throw std::domain_error("war posterior: impossible observation, symbol " + std::to_string(a) +
                                " contradicts deduced theta(" + std::to_string(idx) + ") = " +
                                std::to_string(it->second));
    wp.gap = idx;
    return wp;
}

inline void to_json(nlohmann::json& j, const WarPosterior& wp) {
    nlohmann::json learned = nlohmann::json::array();
    for (auto [k, v] : wp.learned) learned.push_back({k, v});
    j = nlohmann::json{{"learned", learned},
                       {"gap", wp.gap ? nlohmann::json(*wp.gap) : nlohmann::json(nullptr)},
                       {"pre_war", wp.pre_war}};
}

inline void from_json(const nlohmann::json& j, WarPosterior& wp) {
    wp.learned.clear();
    for (const auto& kv : j.at("learned"))
        wp.learned[kv.at(0).get<long>()] = kv.at(1).get<Symbol>();
    wp.gap = j.at("gap").is_null() ? std::nullopt : std::optional<long>(j.at("gap").get<long>());
    wp.pre_war = j.at("pre_war").get<History>();
}

class WarBayesPredictor final : public SequentialPredictor {
public:
    Distribution predict() const override { return war_bayes_predictive(wp_); }
    void observe(Symbol a) override { wp_ = war_posterior_step(std::move(wp_), a); }
    const WarPosterior& posterior() const { return wp_; }

private:
    WarPosterior wp_;
};

/* ---- plumbing predictors ---- */

class ConstantPredictor final : public SequentialPredictor {
public:
    explicit ConstantPredictor(Distribution d) : d_(std::move(d)) {}
    Distribution predict() const override { return d_; }
    void observe(Symbol /*a*/) override {}

private:
    Distribution d_;
};

/// Reads the live component's own predictive. observe() is a no-op here:
/// the component is advanced by whoever drives the simulation.
class ComponentOraclePredictor final : public SequentialPredictor {
public:
    explicit ComponentOraclePredictor(const Component& c) : c_(&c) {}
    Distribution predict() const override { return c_->oracle_predictive(); }
    void observe(Symbol /*a*/) override {}

private:
    const Component* c_;
};

/// JSON-portable predictor description: {"kind": "...", ...parameters}.
/// Kinds: oracle {}, exchangeable {}, mixture {components, prior?},
/// hmm_grid {step? | points?}, war_bayes {}, constant {weights}.
struct PredictorSpec {
    std::string kind;
    nlohmann::json parameters = nlohmann::json::object();

    bool operator==(const PredictorSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const PredictorSpec& s) {
    j = nlohmann::json{{"kind", s.kind}, {"parameters", s.parameters}};
}

inline void from_json(const nlohmann::json& j, PredictorSpec& s) {
    s.kind = j.at("kind").get<std::string>();
    s.parameters = j.value("parameters", nlohmann::json::object());
}

/// Build the predictor named by `spec` against the component it will be
/// compared with. Alphabet compatibility is checked here so a mismatched
/// pairing fails before any step runs.
inline std::unique_ptr<SequentialPredictor> make_predictor(const PredictorSpec& spec,
                                                           const Component& truth) {
    const Alphabet& alpha = truth.alphabet();
    if (spec.kind == "oracle") return std::make_unique<ComponentOraclePredictor>(truth);
    if (spec.kind == "exchangeable") {
        if (alpha.size() != 2)
            throw std::invalid_argument("exchangeable predictor needs a binary alphabet");
        return std::make_unique<ExchangeablePredictor>();
    }
    if (spec.kind == "mixture") {
        Decomposition dec =
            make_decomposition(spec.parameters.at("components").get<std::vector<ComponentSpec>>(),
                               spec.parameters.value("prior", std::vector<double>{}));
        auto post = std::make_unique<MixturePosterior>(dec);
        if (post->alphabet() != alpha)
            throw std::invalid_argument("mixture predictor alphabet does not match the component");
        return post;
    }
    if (spec.kind == "hmm_grid") {
        if (alpha.size() != 2)
            throw std::invalid_argument("hmm_grid predictor needs a binary alphabet");
        if (spec.parameters.contains("points"))
            return std::make_unique<GridPredictor>(make_grid_posterior(
                spec.parameters["points"].get<std::vector<std::pair<double, double>>>()));
        return std::make_unique<GridPredictor>(spec.parameters.value("step", 0.02));
    }
    if (spec.kind == "war_bayes") {
        if (alpha != Alphabet::war_economy())
            throw std::invalid_argument("war_bayes predictor needs the {W, B, G} alphabet");
        return std::make_unique<WarBayesPredictor>();
    }
    if (spec.kind == "constant") {
        Distribution d(spec.parameters.at("weights").get<std::vector<double>>());
        if (d.size() != alpha.size())
            throw std::invalid_argument("constant predictor weight count does not match the alphabet");
        return std::make_unique<ConstantPredictor>(std::move(d));
    }
    throw std::invalid_argument("unknown predictor kind \"" + spec.kind + "\"");
}

}  // namespace ergolearn
