#pragma once

#include <cstdint>
#include <vector>

#include "ergolearn/components.hpp"
#include "ergolearn/core.hpp"
#include "ergolearn/rng.hpp"

namespace test_helpers {

using ergolearn::Distribution;
using ergolearn::History;
using ergolearn::Rng;
using ergolearn::Symbol;

inline Distribution random_distribution(Rng& rng, std::size_t size) {
    std::vector<double> w(size);
    double s = 0.0;
    for (double& x : w) {
        x = rng.uniform01() + 1e-9;
        s += x;
    }
    for (double& x : w) x /= s;
    return Distribution::normalized(std::move(w));
}

/* Exact binomial coefficients; n stays small enough that every value and
 * product below is an exact double. */
inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t c = 1;
    for (int i = 0; i < k; ++i) c = c * static_cast<std::uint64_t>(n - i) / static_cast<std::uint64_t>(i + 1);
    return c;
}

/// Uniform-coin-mixture block probability 1/((n+1) C(n,d)) for a binary
/// history with n symbols, d ones. The independent route to the predictive:
/// P(1 | history) = mu(n+1, d+1) / mu(n, d).
inline double exchangeable_block_probability(int n, int d) {
    return 1.0 / (static_cast<double>(n + 1) * static_cast<double>(binomial(n, d)));
}

/// Stationary block probability of the noisy-persistence chain by explicit
/// enumeration of hidden paths (h_{-1}, h_0, ..., h_{L-1}); independent of
/// the forward recursion used by the library.
inline double hmm_block_probability_bruteforce(const History& block, double p, double q) {
    const int len = static_cast<int>(block.size());
    double total = 0.0;
    const int paths = 1 << (len + 1);
    for (int mask = 0; mask < paths; ++mask) {
        double prob = 0.5;  // hidden state one period before the block
        int prev = mask & 1;
        for (int t = 0; t < len; ++t) {
            int h = (mask >> (t + 1)) & 1;
            prob *= (h == prev) ? p : 1.0 - p;
            prob *= (block[static_cast<std::size_t>(t)] == h) ? q : 1.0 - q;
            prev = h;
        }
        total += prob;
    }
    return total;
}

/// Filtered one-step P(next = G) after a history, by brute force:
/// P(history then G) / P(history) via hidden-path enumeration.
inline double hmm_predictive_bruteforce(const History& history, double p, double q) {
    History with_g = history;
    with_g.push_back(1);
    return hmm_block_probability_bruteforce(with_g, p, q) /
           hmm_block_probability_bruteforce(history, p, q);
}

inline History sample_path(ergolearn::Component& c, std::uint64_t seed, long n) {
    Rng init(seed, ergolearn::Stream::init);
    c.reset(init);
    Rng path(seed, ergolearn::Stream::path);
    History h(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        Symbol a = c.sample_step(path);
        c.observe(a);
        h[static_cast<std::size_t>(i)] = a;
    }
    return h;
}

}  // namespace test_helpers
