#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergolearn/bayes.hpp"
#include "ergolearn/components.hpp"
#include "ergolearn/core.hpp"

namespace ergolearn {

/// Sliding-window block counts over one observed prefix. Frequencies are
/// counts over (N - k + 1) windows, so they sum to 1 across all blocks of
/// the given length.
struct BlockFrequencyTable {
    int block_length = 0;
    long prefix_length = 0;
    long windows = 0;
    std::map<History, long> counts;

    double frequency(const History& block) const {
        auto it = counts.find(block);
        return it == counts.end()
                   ? 0.0
                   : static_cast<double>(it->second) / static_cast<double>(windows);
    }
};

inline BlockFrequencyTable block_frequencies(const History& prefix, int k) {
    if (k < 1) throw std::invalid_argument("block_frequencies: block length must be >= 1");
    if (static_cast<long>(prefix.size()) < k)
        throw std::invalid_argument("block_frequencies: prefix of length " +
                                    std::to_string(prefix.size()) +
                                    " is shorter than the block length " + std::to_string(k));
    BlockFrequencyTable t;
    t.block_length = k;
    t.prefix_length = static_cast<long>(prefix.size());
    t.windows = t.prefix_length - k + 1;
    History window(static_cast<std::size_t>(k));
    for (long i = 0; i + k <= t.prefix_length; ++i) {
        for (int j = 0; j < k; ++j) window[static_cast<std::size_t>(j)] = prefix[static_cast<std::size_t>(i + j)];
        ++t.counts[window];
    }
    return t;
}

/// All |alphabet|^k blocks of length k in lexicographic order.
inline std::vector<History> enumerate_blocks(std::size_t alphabet_size, int k) {
    std::vector<History> out{History{}};
    for (int step = 0; step < k; ++step) {
        std::vector<History> next;
        next.reserve(out.size() * alphabet_size);
        for (const History& h : out)
            for (std::size_t a = 0; a < alphabet_size; ++a) {
                History h2 = h;
                h2.push_back(static_cast<Symbol>(a));
                next.push_back(std::move(h2));
            }
        out = std::move(next);
    }
    return out;
}

/// Worst absolute gap between the table and a component's exact block law,
/// taken over every block of the table's length (unobserved blocks count
/// with frequency 0).
inline double max_block_gap(const BlockFrequencyTable& table, const Component& component) {
    double worst = 0.0;
    for (const History& b : enumerate_blocks(component.alphabet().size(), table.block_length)) {
        double gap = std::abs(table.frequency(b) - component.exact_block_probability(b));
        if (gap > worst) worst = gap;
    }
    return worst;
}

struct IdentificationResult {
    std::size_t parameter_index = 0;
    double score = 0.0;  // the winner's max-over-blocks gap
};

/// Pick the decomposition member whose exact block law best explains the
/// table, scoring by max-over-blocks absolute gap; ties resolve to the
/// lowest index. With one member the answer is that member.
inline IdentificationResult identify_component(const BlockFrequencyTable& table,
                                               const Decomposition& dec) {
    if (dec.components.empty()) throw std::invalid_argument("identify_component: empty decomposition");
    IdentificationResult best;
    bool first = true;
    for (std::size_t i = 0; i < dec.components.size(); ++i) {
        auto comp = make_component(dec.components[i]);
        double score = max_block_gap(table, *comp);
        if (first || score < best.score) {
            best.parameter_index = i;
            best.score = score;
            first = false;
        }
    }
    return best;
}

}  // namespace ergolearn
