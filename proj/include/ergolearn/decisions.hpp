#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ergolearn/bayes.hpp"
#include "ergolearn/components.hpp"
#include "ergolearn/core.hpp"
#include "ergolearn/merging.hpp"
#include "ergolearn/rng.hpp"

namespace ergolearn {

/// One-shot-per-step decision problem: payoff[symbol][action] in [0, 1],
/// earned when `symbol` is the realized outcome. Actions never influence
/// the process.
struct DecisionProblem {
    std::vector<std::string> actions;
    std::vector<std::vector<double>> payoff;

    DecisionProblem(std::vector<std::string> actions_in,
                    std::vector<std::vector<double>> payoff_in)
        : actions(std::move(actions_in)), payoff(std::move(payoff_in)) {
        if (actions.empty()) throw std::domain_error("decision problem: no actions");
        if (payoff.empty()) throw std::domain_error("decision problem: empty payoff matrix");
        for (const auto& row : payoff) {
            if (row.size() != actions.size())
                throw std::domain_error("decision problem: payoff row length does not match action count");
            for (double r : row)
                if (!(r >= 0.0 && r <= 1.0))
                    throw std::domain_error("decision problem: payoff " + std::to_string(r) +
                                            " outside [0,1]");
        }
    }
};

/// Identity payoff: one action per symbol, paying 1 exactly on a match.
inline DecisionProblem matching_problem(const Alphabet& alpha) {
    std::vector<std::string> actions;
    std::vector<std::vector<double>> payoff(alpha.size(), std::vector<double>(alpha.size(), 0.0));
    for (std::size_t a = 0; a < alpha.size(); ++a) {
        actions.push_back("predict-" + alpha.label(static_cast<Symbol>(a)));
        payoff[a][a] = 1.0;
    }
    return DecisionProblem(std::move(actions), std::move(payoff));
}

/// Myopic action: maximize one-step expected payoff under the predictive;
/// exact ties resolve to the lowest action index.
inline int greedy_action(const Distribution& predictive, const DecisionProblem& prob) {
    if (predictive.size() != prob.payoff.size())
        throw std::domain_error("greedy_action: predictive size does not match payoff rows");
    int best = 0;
    double best_score = -1.0;
    for (std::size_t d = 0; d < prob.actions.size(); ++d) {
        double score = 0.0;
        for (std::size_t a = 0; a < predictive.size(); ++a)
            score += predictive.weights()[a] * prob.payoff[a][d];
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(d);
        }
    }
    return best;
}

/// A strategy is a history-to-action rule; here always the myopic argmax on
/// top of a named predictor. Against an outcome-independent process the
/// myopic rule is optimal-in-the-limit for average payoff under its own
/// belief, so strategies compare purely through their predictors.
struct Strategy {
    PredictorSpec predictor;
};

inline Strategy greedy_strategy(PredictorSpec predictor) { return Strategy{std::move(predictor)}; }

struct ValueEstimate {
    double mean = 0.0;
    std::vector<double> per_seed;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Average realized payoff per step of the strategy against the true
/// component over N steps, averaged over the seed panel.
inline ValueEstimate evaluate_VN(const Strategy& strategy, const ComponentSpec& truth,
                                 const DecisionProblem& prob, long horizon,
                                 const std::vector<std::uint64_t>& seeds) {
    detail::check_horizon(horizon);
    if (seeds.empty()) throw std::invalid_argument("evaluate_VN: empty seed panel");
    ValueEstimate est;
    for (std::uint64_t seed : seeds) {
        auto component = make_component(truth, seed);
        Rng init_rng(seed, Stream::init);
        component->reset(init_rng);
        auto predictor = make_predictor(strategy.predictor, *component);
        Rng path_rng(seed, Stream::path);
        double total = 0.0;
        for (long n = 0; n < horizon; ++n) {
            int act = greedy_action(predictor->predict(), prob);
            Symbol a = component->sample_step(path_rng);
            total += prob.payoff[static_cast<std::size_t>(a)][static_cast<std::size_t>(act)];
            component->observe(a);
            predictor->observe(a);
        }
        est.per_seed.push_back(total / static_cast<double>(horizon));
    }
    est.mean = detail::mean_of(est.per_seed);
    return est;
}

struct OptimalityGap {
    double gap = 0.0;  // V_oracle - V_belief
    ValueEstimate oracle;
    ValueEstimate belief;
};

/// Paired comparison of the belief strategy against the truth-knowing
/// oracle strategy: both walk the same sampled path seed by seed, so the
/// gap is free of between-run sampling noise, and a belief whose
/// predictive coincides with the oracle's earns a gap of exactly zero.
inline OptimalityGap epsilon_optimality_gap(const PredictorSpec& belief, const ComponentSpec& truth,
                                            const DecisionProblem& prob, long horizon,
                                            const std::vector<std::uint64_t>& seeds) {
    detail::check_horizon(horizon);
    if (seeds.empty()) throw std::invalid_argument("epsilon_optimality_gap: empty seed panel");
    OptimalityGap out;
    for (std::uint64_t seed : seeds) {
        auto component = make_component(truth, seed);
        Rng init_rng(seed, Stream::init);
        component->reset(init_rng);
        auto belief_pred = make_predictor(belief, *component);
        Rng path_rng(seed, Stream::path);
        double total_oracle = 0.0, total_belief = 0.0;
        for (long n = 0; n < horizon; ++n) {
            int act_oracle = greedy_action(component->oracle_predictive(), prob);
            int act_belief = greedy_action(belief_pred->predict(), prob);
            Symbol a = component->sample_step(path_rng);
            const auto& row = prob.payoff[static_cast<std::size_t>(a)];
            total_oracle += row[static_cast<std::size_t>(act_oracle)];
            total_belief += row[static_cast<std::size_t>(act_belief)];
            component->observe(a);
            belief_pred->observe(a);
        }
        out.oracle.per_seed.push_back(total_oracle / static_cast<double>(horizon));
        out.belief.per_seed.push_back(total_belief / static_cast<double>(horizon));
    }
    out.oracle.mean = detail::mean_of(out.oracle.per_seed);
    out.belief.mean = detail::mean_of(out.belief.per_seed);
    out.gap = out.oracle.mean - out.belief.mean;
    return out;
}

}  // namespace ergolearn
