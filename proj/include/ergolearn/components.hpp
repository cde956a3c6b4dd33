#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ergolearn/core.hpp"
#include "ergolearn/rng.hpp"

namespace ergolearn {

/// Longest block exact_block_probability accepts. Downstream consumers only
/// ever compare short blocks; the bound keeps cost and precision obvious.
inline constexpr int kMaxExactBlockLength = 25;

/// Hidden-gap cutoff in the war component's exact block law. Initial gaps
/// above the cutoff are folded in at their prior mean, an absolute error
/// below 2^-61.
inline constexpr long kWarHiddenCutoff = 60;

/// One stationary ergodic source: a seeded sampler of its own law plus the
/// truth-knowing one-step predictive ("oracle") and exact block
/// probabilities.
///
/// Per simulated step the caller must (1) read oracle_predictive(), which
/// describes the next outcome, (2) draw it with sample_step(), then
/// (3) pass it to observe() so the oracle's information state advances.
/// observe() is driven by the outcome value alone, so a recorded path can
/// be replayed through a fresh instance.
class Component {
public:
    virtual ~Component() = default;

    const Alphabet& alphabet() const { return alphabet_; }

    /// Draw the hidden state (if any) from the component's stationary law.
    virtual void reset(Rng& /*rng*/) {}

    /// Emit the next outcome.
    virtual Symbol sample_step(Rng& rng) = 0;

    /// One-step predictive of the true law given the component's own state.
    virtual Distribution oracle_predictive() const = 0;

    /// Advance the oracle's information state on an emitted or replayed
    /// outcome.
    virtual void observe(Symbol /*a*/) {}

    /// Exact stationary probability of observing `block` at any fixed
    /// offset. Blocks longer than kMaxExactBlockLength are refused.
    double exact_block_probability(const History& block) const {
        if (static_cast<int>(block.size()) > kMaxExactBlockLength)
            throw std::invalid_argument("exact_block_probability: block length " +
                                        std::to_string(block.size()) + " exceeds bound " +
                                        std::to_string(kMaxExactBlockLength));
        for (Symbol a : block)
            if (!alphabet_.contains(a))
                throw std::invalid_argument("exact_block_probability: symbol index " +
                                            std::to_string(a) + " outside alphabet");
        return block_probability_impl(block);
    }

protected:
    explicit Component(Alphabet a) : alphabet_(std::move(a)) {}

    virtual double block_probability_impl(const History& block) const = 0;

    Alphabet alphabet_;
};

/// Coin with fixed success probability theta over the alphabet {0, 1}.
class BernoulliComponent final : public Component {
public:
    explicit BernoulliComponent(double theta) : Component(Alphabet::binary()), theta_(theta) {
        if (!(theta >= 0.0 && theta <= 1.0))
            throw std::domain_error("bernoulli: theta " + std::to_string(theta) + " outside [0,1]");
    }

    double theta() const { return theta_; }

    Symbol sample_step(Rng& rng) override { return rng.bernoulli(theta_) ? 1 : 0; }

    Distribution oracle_predictive() const override { return Distribution{1.0 - theta_, theta_}; }

protected:
    double block_probability_impl(const History& block) const override {
        double p = 1.0;
        for (Symbol a : block) p *= (a == 1) ? theta_ : 1.0 - theta_;
        return p;
    }

private:
    double theta_;
};

/* ---- two-state noisy-persistence chain, alphabet {B, G} ---- */

inline void check_persistence_params(double p, double q) {
    if (!(p > 0.5 && p <= 1.0))
        throw std::domain_error("persistence chain: p " + std::to_string(p) + " outside (1/2, 1]");
    if (!(q > 0.5 && q <= 1.0))
        throw std::domain_error("persistence chain: q " + std::to_string(q) + " outside (1/2, 1]");
}

/// Joint law of (next hidden, next observed) given the current hidden state
/// h (0 = B, 1 = G): the hidden state persists with probability p, and the
/// observation matches the new hidden state with probability q. Entries in
/// the order (B,B), (B,G), (G,B), (G,G).
inline Distribution hm_transition(int h, double p, double q) {
    check_persistence_params(p, q);
    if (h != 0 && h != 1) throw std::domain_error("hm_transition: hidden state must be 0 or 1");
    std::vector<double> w(4);
    for (int h2 = 0; h2 < 2; ++h2) {
        double ph = (h2 == h) ? p : 1.0 - p;
        for (int a = 0; a < 2; ++a) w[static_cast<std::size_t>(2 * h2 + a)] = ph * ((a == h2) ? q : 1.0 - q);
    }
    return Distribution(std::move(w));
}

/// One forward-filter step for the chain with known (p, q). Input is the
/// current P(hidden = G | past observations); output carries the one-step
/// likelihood of `a` and the updated filter. A zero likelihood (possible
/// only on the p = 1 or q = 1 boundary) leaves the filter unchanged.
struct HmmFilterStep {
    double likelihood;
    double filter_g;
};

inline HmmFilterStep hmm_filter_step(double filter_g, Symbol a, double p, double q) {
    double g = p * filter_g + (1.0 - p) * (1.0 - filter_g);  // predicted P(hidden' = G)
    double pg = g * q + (1.0 - g) * (1.0 - q);               // predicted P(observe G)
    double lik = (a == 1) ? pg : 1.0 - pg;
    if (lik <= 0.0) return {0.0, filter_g};
    double joint_g = (a == 1) ? g * q : g * (1.0 - q);       // P(hidden' = G, observe a)
    return {lik, joint_g / lik};
}

/// Predicted P(observe G) one step ahead of the current filter state.
inline double hmm_one_step_predictive(double filter_g, double p, double q) {
    double g = p * filter_g + (1.0 - p) * (1.0 - filter_g);
    return g * q + (1.0 - g) * (1.0 - q);
}

/// Hidden two-state chain (B = 0, G = 1) with persistence p, observed
/// through a channel that reports the hidden state correctly with
/// probability q. Starts from the stationary hidden law (1/2, 1/2). The
/// oracle is the known-parameter forward filter on the observations.
class HiddenMarkovComponent final : public Component {
public:
    HiddenMarkovComponent(double p, double q)
        : Component(Alphabet::economy()), p_(p), q_(q) {
        check_persistence_params(p, q);
    }

    double p() const { return p_; }
    double q() const { return q_; }

    void reset(Rng& rng) override {
        hidden_ = rng.fair_bit() ? 1 : 0;
        filter_g_ = 0.5;
    }

    Symbol sample_step(Rng& rng) override {
        if (!rng.bernoulli(p_)) hidden_ = 1 - hidden_;
        bool faithful = rng.bernoulli(q_);
        return faithful ? hidden_ : 1 - hidden_;
    }

    Distribution oracle_predictive() const override {
        double pg = hmm_one_step_predictive(filter_g_, p_, q_);
        return Distribution{1.0 - pg, pg};
    }

    void observe(Symbol a) override {
        HmmFilterStep s = hmm_filter_step(filter_g_, a, p_, q_);
        if (s.likelihood <= 0.0)
            throw std::domain_error("persistence chain: observation impossible at this parameter corner");
        filter_g_ = s.filter_g;
    }

    int hidden_state() const { return hidden_; }
    double filter_state() const { return filter_g_; }

    /* test hooks: hidden state and filter are part of the component's
     * published state, not incidental internals */
    void set_hidden_state(int h) {
        if (h != 0 && h != 1) throw std::domain_error("hidden state must be 0 or 1");
        hidden_ = h;
    }
    void set_filter_state(double g) {
        if (!(g >= 0.0 && g <= 1.0)) throw std::domain_error("filter state outside [0,1]");
        filter_g_ = g;
    }

protected:
    double block_probability_impl(const History& block) const override {
        // forward pass over the two hidden states; alpha starts at the
        // stationary hidden law one period before the block
        double alpha[2] = {0.5, 0.5};
        for (Symbol a : block) {
            double next[2];
            for (int h2 = 0; h2 < 2; ++h2) {
                double trans = alpha[h2] * p_ + alpha[1 - h2] * (1.0 - p_);
                next[h2] = trans * ((a == h2) ? q_ : 1.0 - q_);
            }
            alpha[0] = next[0];
            alpha[1] = next[1];
        }
        return alpha[0] + alpha[1];
    }

private:
    double p_, q_;
    int hidden_ = 0;
    double filter_g_ = 0.5;
};

/// Renewal source over {W, B, G}: each step is a war (W, probability 1/2)
/// resetting the hidden gap to 0, or a peaceful step advancing the gap k
/// and emitting the fixed label theta(k) in {B, G}. The label sequence
/// theta is a fair draw fixed by the seed alone, probed lazily: theta(k)
/// depends only on (seed, k), never on probe order. The oracle reads the
/// live gap: next outcome is W with 1/2, theta(gap + 1) with 1/2.
class WarComponent final : public Component {
public:
    static constexpr Symbol kWar = 0;

    explicit WarComponent(std::uint64_t seed)
        : Component(Alphabet::war_economy()), theta_seed_(stream_seed(seed, Stream::theta)) {}

    /// theta(k) for k >= 1; returns 1 (B) or 2 (G).
    Symbol theta_at(long k) const {
        if (k < 1) throw std::domain_error("theta_at: index must be >= 1");
        return 1 + static_cast<Symbol>(splitmix64(theta_seed_ + static_cast<std::uint64_t>(k)) & 1u);
    }

    long gap() const { return xi_; }
    void set_gap(long xi) {
        if (xi < 0) throw std::domain_error("gap must be >= 0");
        xi_ = xi;
    }

    void reset(Rng& rng) override { xi_ = rng.geometric_fair(); }

    Symbol sample_step(Rng& rng) override {
        if (rng.fair_bit()) {
            xi_ = 0;
            return kWar;
        }
        ++xi_;
        return theta_at(xi_);
    }

    Distribution oracle_predictive() const override {
        std::vector<double> w(3, 0.0);
        w[0] = 0.5;
        w[static_cast<std::size_t>(theta_at(xi_ + 1))] = 0.5;
        return Distribution(std::move(w));
    }

protected:
    double block_probability_impl(const History& block) const override {
        if (block.empty()) return 1.0;
        const int len = static_cast<int>(block.size());
        const double block_steps = std::ldexp(1.0, -len);  // each step carries mass 1/2

        /* Sum over the hidden gap k0 one period before the block: the path
         * through the block is then forced, and consistency only asks that
         * peaceful symbols match theta at their gap. */
        double total = 0.0;
        for (long k0 = 0; k0 <= kWarHiddenCutoff; ++k0) {
            long xi = k0;
            bool ok = true;
            for (Symbol a : block) {
                if (a == WarComponent::kWar) {
                    xi = 0;
                } else {
                    ++xi;
                    if (theta_at(xi) != a) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok) total += std::ldexp(1.0, -static_cast<int>(k0 + 1)) * block_steps;
        }

        /* Gaps above the cutoff: pre-first-war peaceful symbols probe theta
         * beyond anything the block can pin down, so they match with prior
         * probability 1/2 each; consistency after the first war does not
         * depend on k0. Folding the tail at that mean leaves an absolute
         * error below 2^-(cutoff+1). */
        long xi = 0;
        bool seen_war = false, post_ok = true;
        int pre = 0;
        for (Symbol a : block) {
            if (a == WarComponent::kWar) {
                seen_war = true;
                xi = 0;
            } else if (!seen_war) {
                ++pre;
            } else {
                ++xi;
                if (theta_at(xi) != a) {
                    post_ok = false;
                    break;
                }
            }
        }
        if (post_ok)
            total += std::ldexp(1.0, -static_cast<int>(kWarHiddenCutoff + 1)) * block_steps *
                     std::ldexp(1.0, -pre);
        return total;
    }

private:
    std::uint64_t theta_seed_;
    long xi_ = 0;
};

/// Finite-state chain given by an explicit transition matrix. The matrix
/// must be irreducible and aperiodic; the start law is the unique
/// stationary vector, solved at construction and checked against the
/// balance equations to 1e-10. The full state is observed, so the oracle
/// is the transition row of the last outcome.
class MarkovComponent final : public Component {
public:
    explicit MarkovComponent(std::vector<std::vector<double>> rows,
                             std::vector<std::string> labels = {})
        : Component(make_alphabet(rows.size(), std::move(labels))),
          rows_(validate_rows(std::move(rows))),
          stationary_(solve_stationary(rows_)) {}

    const Distribution& stationary() const { return stationary_; }
    const std::vector<Distribution>& rows() const { return rows_; }

    void reset(Rng& /*rng*/) override { last_ = -1; }

    Symbol sample_step(Rng& rng) override {
        const Distribution& d = (last_ < 0) ? stationary_ : rows_[static_cast<std::size_t>(last_)];
        return sample_index(d, rng);
    }

    Distribution oracle_predictive() const override {
        return (last_ < 0) ? stationary_ : rows_[static_cast<std::size_t>(last_)];
    }

    void observe(Symbol a) override {
        if (!alphabet_.contains(a))
            throw std::domain_error("markov: observed symbol outside alphabet");
        last_ = a;
    }

    static Symbol sample_index(const Distribution& d, Rng& rng) {
        double u = rng.uniform01();
        double c = 0.0;
        for (std::size_t i = 0; i + 1 < d.size(); ++i) {
            c += d.weights()[i];
            if (u < c) return static_cast<Symbol>(i);
        }
        return static_cast<Symbol>(d.size() - 1);
    }

protected:
    double block_probability_impl(const History& block) const override {
        if (block.empty()) return 1.0;
        double p = stationary_[block[0]];
        for (std::size_t i = 1; i < block.size(); ++i)
            p *= rows_[static_cast<std::size_t>(block[i - 1])][block[i]];
        return p;
    }

private:
    static Alphabet make_alphabet(std::size_t n, std::vector<std::string> labels) {
        if (labels.empty())
            for (std::size_t i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i));
        if (labels.size() != n)
            throw std::domain_error("markov: label count does not match state count");
        return Alphabet(std::move(labels));
    }

    static std::vector<Distribution> validate_rows(std::vector<std::vector<double>> rows) {
        const std::size_t n = rows.size();
        if (n < 2) throw std::domain_error("markov: need at least 2 states");
        std::vector<Distribution> out;
        out.reserve(n);
        for (auto& r : rows) {
            if (r.size() != n) throw std::domain_error("markov: transition matrix must be square");
            out.emplace_back(std::move(r));  // row validation: nonnegative, sums to 1
        }
        check_irreducible_aperiodic(out);
        return out;
    }

    static void check_irreducible_aperiodic(const std::vector<Distribution>& rows) {
        const std::size_t n = rows.size();
        std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) reach[i][j] = rows[i].weights()[j] > 0.0;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[i][k] && reach[k][j]) reach[i][j] = true;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (!reach[i][j])
                    throw std::domain_error("markov: transition matrix is not irreducible");

        // period = gcd over edges u->v of depth(u) + 1 - depth(v), taken on
        // a BFS tree; 1 means aperiodic
        std::vector<long> depth(n, -1);
        std::vector<std::size_t> queue{0};
        depth[0] = 0;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            std::size_t u = queue[qi];
            for (std::size_t v = 0; v < n; ++v)
                if (rows[u].weights()[v] > 0.0 && depth[v] < 0) {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
        }
        long g = 0;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v)
                if (rows[u].weights()[v] > 0.0)
                    g = std::gcd(g, depth[u] + 1 - depth[v]);
        if (std::abs(g) != 1)
            throw std::domain_error("markov: transition matrix has period " +
                                    std::to_string(std::abs(g)));
    }

    static Distribution solve_stationary(const std::vector<Distribution>& rows) {
        /* Solve pi P = pi, sum pi = 1: Gaussian elimination on (P^T - I)
         * with the last equation replaced by the mass constraint. */
        const std::size_t n = rows.size();
        std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) m[i][j] = rows[j].weights()[i];
            m[i][i] -= 1.0;
        }
        for (std::size_t j = 0; j < n; ++j) m[n - 1][j] = 1.0;
        m[n - 1][n] = 1.0;

        for (std::size_t c = 0; c < n; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < n; ++r)
                if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
            std::swap(m[c], m[piv]);
            if (std::abs(m[c][c]) < 1e-14)
                throw std::domain_error("markov: stationary system is singular");
            for (std::size_t r = 0; r < n; ++r) {
                if (r == c) continue;
                double f = m[r][c] / m[c][c];
                for (std::size_t j = c; j <= n; ++j) m[r][j] -= f * m[c][j];
            }
        }
        std::vector<double> pi(n);
        for (std::size_t i = 0; i < n; ++i) pi[i] = m[i][n] / m[i][i];

        for (std::size_t j = 0; j < n; ++j) {
            double flow = 0.0;
            for (std::size_t i = 0; i < n; ++i) flow += pi[i] * rows[i].weights()[j];
            if (std::abs(flow - pi[j]) > 1e-10)
                throw std::domain_error("markov: stationary vector fails balance check");
        }
        return Distribution::normalized(std::move(pi));
    }

    std::vector<Distribution> rows_;
    Distribution stationary_;
    Symbol last_ = -1;
};

/// JSON-portable component description:
///   {"family": "...", "parameters": {...}, "seed": n}
/// Families: bernoulli {theta}, hmm {p, q}, war {}, markov {transition,
/// labels?}. The same record under the same library version reproduces the
/// identical sample path.
struct ComponentSpec {
    std::string family;
    nlohmann::json parameters = nlohmann::json::object();
    std::uint64_t seed = 0;

    bool operator==(const ComponentSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const ComponentSpec& s) {
    j = nlohmann::json{{"family", s.family}, {"parameters", s.parameters}, {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, ComponentSpec& s) {
    s.family = j.at("family").get<std::string>();
    s.parameters = j.value("parameters", nlohmann::json::object());
    s.seed = j.value("seed", std::uint64_t{0});
}

/// Short human-readable form for report rows, e.g. "bernoulli(theta=0.3)".
inline std::string describe_component(const ComponentSpec& s) {
    auto num = [](const nlohmann::json& v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%g", v.get<double>());
        return std::string(buf);
    };
    if (s.family == "bernoulli" && s.parameters.contains("theta"))
        return "bernoulli(theta=" + num(s.parameters["theta"]) + ")";
    if (s.family == "hmm" && s.parameters.contains("p") && s.parameters.contains("q"))
        return "hmm(p=" + num(s.parameters["p"]) + ",q=" + num(s.parameters["q"]) + ")";
    if (s.family == "markov") return "markov";
    if (s.family == "war") return "war";
    if (s.family == "dirac-fair-coin") return "dirac-fair-coin";
    return s.family;
}

/// Build a component from its spec. `seed_override`, when given, replaces
/// the spec's own seed (panel runs derive per-seed instances this way).
inline std::unique_ptr<Component> make_component(const ComponentSpec& s,
                                                 std::optional<std::uint64_t> seed_override = {}) {
    const std::uint64_t seed = seed_override.value_or(s.seed);
    if (s.family == "bernoulli") {
        if (!s.parameters.contains("theta"))
            throw std::invalid_argument("bernoulli component: missing parameter theta");
        return std::make_unique<BernoulliComponent>(s.parameters["theta"].get<double>());
    }
    if (s.family == "hmm") {
        if (!s.parameters.contains("p") || !s.parameters.contains("q"))
            throw std::invalid_argument("hmm component: missing parameter p or q");
        return std::make_unique<HiddenMarkovComponent>(s.parameters["p"].get<double>(),
                                                       s.parameters["q"].get<double>());
    }
    if (s.family == "war") return std::make_unique<WarComponent>(seed);
    if (s.family == "markov") {
        if (!s.parameters.contains("transition"))
            throw std::invalid_argument("markov component: missing parameter transition");
        auto rows = s.parameters["transition"].get<std::vector<std::vector<double>>>();
        std::vector<std::string> labels;
        if (s.parameters.contains("labels"))
            labels = s.parameters["labels"].get<std::vector<std::string>>();
        return std::make_unique<MarkovComponent>(std::move(rows), std::move(labels));
    }
    throw std::invalid_argument("unknown component family \"" + s.family + "\"");
}

}  // namespace ergolearn
