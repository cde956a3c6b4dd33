#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ergolearn {

/// Index into an Alphabet.
using Symbol = int;

/// Time-ordered outcome indices, oldest first.
using History = std::vector<Symbol>;

/// Ordered finite set of outcome labels. Index order is fixed for the
/// lifetime of a run; histories and distributions refer to it by index.
class Alphabet {
public:
    explicit Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
        if (symbols_.size() < 2)
            throw std::invalid_argument("alphabet: need at least 2 symbols");
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            for (std::size_t j = i + 1; j < symbols_.size(); ++j)
                if (symbols_[i] == symbols_[j])
                    throw std::invalid_argument("alphabet: duplicate symbol \"" + symbols_[i] + "\"");
    }

    std::size_t size() const { return symbols_.size(); }

    const std::string& label(Symbol a) const { return symbols_.at(static_cast<std::size_t>(a)); }

    /// Index of a label, or -1 when absent.
    int index_of(const std::string& s) const {
        for (std::size_t i = 0; i < symbols_.size(); ++i)
            if (symbols_[i] == s) return static_cast<int>(i);
        return -1;
    }

    bool contains(Symbol a) const { return a >= 0 && static_cast<std::size_t>(a) < symbols_.size(); }

    const std::vector<std::string>& labels() const { return symbols_; }

    bool operator==(const Alphabet&) const = default;

    static Alphabet binary() { return Alphabet({"0", "1"}); }
    static Alphabet economy() { return Alphabet({"B", "G"}); }
    static Alphabet war_economy() { return Alphabet({"W", "B", "G"}); }

private:
    std::vector<std::string> symbols_;
};

/// Probability vector. Construction validates: every weight in [0,1] and
/// total mass within kSumTolerance of 1. Size 1 is allowed (priors over a
/// single parameter); outcome distributions inherit size >= 2 from their
/// Alphabet.
class Distribution {
public:
    static constexpr double kSumTolerance = 1e-12;

    explicit Distribution(std::vector<double> weights) : w_(std::move(weights)) { validate(); }
    Distribution(std::initializer_list<double> weights) : w_(weights) { validate(); }

    /// Rescale by total mass, then validate. For weights that are exact up
    /// to accumulated rounding but may have drifted past kSumTolerance.
    static Distribution normalized(std::vector<double> weights) {
        double s = 0.0;
        for (double x : weights) s += x;
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::domain_error("distribution: total mass must be positive and finite");
        for (double& x : weights) x /= s;
        return Distribution(std::move(weights));
    }

    static Distribution point_mass(std::size_t size, Symbol a) {
        std::vector<double> w(size, 0.0);
        w.at(static_cast<std::size_t>(a)) = 1.0;
        return Distribution(std::move(w));
    }

    std::size_t size() const { return w_.size(); }
    double operator[](Symbol a) const { return w_[static_cast<std::size_t>(a)]; }
    const std::vector<double>& weights() const { return w_; }

    bool operator==(const Distribution&) const = default;

private:
    void validate() const {
        if (w_.empty()) throw std::domain_error("distribution: empty weight vector");
        double s = 0.0;
        for (double x : w_) {
            if (!(x >= 0.0 && x <= 1.0))
                throw std::domain_error("distribution: weight " + std::to_string(x) + " outside [0,1]");
            s += x;
        }
        if (std::abs(s - 1.0) > kSumTolerance)
            throw std::domain_error("distribution: weights sum to " + std::to_string(s));
    }

    std::vector<double> w_;
};

/// Sup distance max_a |p[a] - q[a]| between distributions on one alphabet.
/// Always lands in [0,1].
inline double sup_distance(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size())
        throw std::domain_error("sup_distance: size mismatch (" + std::to_string(p.size()) +
                                " vs " + std::to_string(q.size()) + ")");
    double m = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a)
        m = std::max(m, std::abs(p.weights()[a] - q.weights()[a]));
    return m;
}

/// Per-step values d_0..d_{N-1} plus running means
/// m_n = (d_0 + ... + d_n) / (n+1).
struct CesaroTrace {
    std::vector<double> values;
    std::vector<double> running_means;

    std::size_t size() const { return values.size(); }
    double final_mean() const { return running_means.empty() ? 0.0 : running_means.back(); }
};

/* Running means under Neumaier-compensated summation: for values in [0,1]
 * the accumulated sum error stays near one ulp of the total, so each mean
 * is within 1e-10 of direct summation far beyond N = 1e7, and sums that
 * are exactly representable (e.g. multiples of 0.25) stay exact. */
inline CesaroTrace cesaro_means(const std::vector<double>& values) {
    CesaroTrace t;
    t.values = values;
    t.running_means.resize(values.size());
    double sum = 0.0, comp = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n) {
        double x = values[n];
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("cesaro_means: value outside [0,1] at step " + std::to_string(n));
        double s = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - s) + x;
        else
            comp += (x - s) + sum;
        sum = s;
        t.running_means[n] = (sum + comp) / static_cast<double>(n + 1);
    }
    return t;
}

/// Outcome of the finite-horizon convergence checks.
struct MergeVerdict {
    bool weak = false;
    bool strong = false;
};

/// Finite-horizon surrogate for "values die out":
///   weak   - final running mean < epsilon (the averaged sense; a vanishing
///            fraction of large values cannot break it);
///   strong - every single value in the trailing ceil(tail_fraction * N)
///            entries is < epsilon.
/// The indicator of perfect squares over N = 1e4 separates the two: mean
/// 0.01 passes weak at epsilon 0.05, while squares beyond N/2 break strong.
inline MergeVerdict full_density_limit_test(const CesaroTrace& trace, double epsilon,
                                            double tail_fraction) {
    if (trace.values.empty())
        throw std::invalid_argument("full_density_limit_test: empty trace");
    if (trace.running_means.size() != trace.values.size())
        throw std::invalid_argument("full_density_limit_test: trace means out of step with values");
    if (!(epsilon > 0.0))
        throw std::invalid_argument("full_density_limit_test: epsilon must be positive");
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
        throw std::invalid_argument("full_density_limit_test: tail_fraction must lie in (0,1)");

    MergeVerdict v;
    v.weak = trace.final_mean() < epsilon;

    const std::size_t n = trace.values.size();
    auto tail_len = static_cast<std::size_t>(
        std::ceil(tail_fraction * static_cast<double>(n) - 1e-9));
    if (tail_len < 1) tail_len = 1;
    if (tail_len > n) tail_len = n;
    v.strong = true;
    for (std::size_t i = n - tail_len; i < n; ++i)
        if (!(trace.values[i] < epsilon)) {
            v.strong = false;
            break;
        }
    return v;
}

}  // namespace ergolearn
