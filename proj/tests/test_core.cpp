#include <cmath>
#include <stdexcept>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ergolearn/core.hpp"
#include "ergolearn/rng.hpp"
#include "helpers.hpp"

using namespace ergolearn;

namespace {

bool is_square(long n) {
    auto r = static_cast<long>(std::sqrt(static_cast<double>(n)));
    for (long c = r - 1; c <= r + 1; ++c)
        if (c >= 0 && c * c == n) return true;
    return false;
}

std::vector<double> square_indicator(long n) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    for (long i = 0; i < n; ++i)
        if (is_square(i)) v[static_cast<std::size_t>(i)] = 1.0;
    return v;
}

}  // namespace

TEST_CASE("alphabet indexing and validation", "[core]") {
    Alphabet a = Alphabet::war_economy();
    REQUIRE(a.size() == 3);
    REQUIRE(a.label(0) == "W");
    REQUIRE(a.label(2) == "G");
    REQUIRE(a.index_of("G") == 2);
    REQUIRE(a.index_of("missing") == -1);
    REQUIRE(a.contains(2));
    REQUIRE_FALSE(a.contains(3));
    REQUIRE_FALSE(a.contains(-1));
    REQUIRE(Alphabet::binary() == Alphabet({"0", "1"}));

    REQUIRE_THROWS_AS(Alphabet({"only"}), std::invalid_argument);
    REQUIRE_THROWS_AS(Alphabet({"B", "G", "B"}), std::invalid_argument);
}

TEST_CASE("distribution validation", "[core]") {
    REQUIRE_NOTHROW(Distribution({0.5, 0.25, 0.25}));
    REQUIRE_THROWS_AS(Distribution({0.5, 0.6}), std::domain_error);
    REQUIRE_THROWS_AS(Distribution({-0.1, 1.1}), std::domain_error);
    REQUIRE_THROWS_AS(Distribution({0.3, 0.3}), std::domain_error);
    REQUIRE_THROWS_AS(Distribution(std::vector<double>{}), std::domain_error);

    // mass tolerance is 1e-12, absolute
    REQUIRE_NOTHROW(Distribution({0.5, 0.5 + 0.9e-12}));
    REQUIRE_THROWS_AS(Distribution({0.5, 0.5 + 1.1e-12}), std::domain_error);

    Distribution n = Distribution::normalized({2.0, 6.0});
    REQUIRE(n[0] == 0.25);
    REQUIRE(n[1] == 0.75);
    REQUIRE_THROWS_AS(Distribution::normalized({0.0, 0.0}), std::domain_error);

    Distribution pm = Distribution::point_mass(3, 1);
    REQUIRE(pm[0] == 0.0);
    REQUIRE(pm[1] == 1.0);
}

TEST_CASE("sup distance on worked values", "[core]") {
    REQUIRE(sup_distance(Distribution{1.0, 0.0}, Distribution{0.0, 1.0}) == 1.0);
    REQUIRE(sup_distance(Distribution{0.5, 0.25, 0.25}, Distribution{0.5, 0.5, 0.0}) == 0.25);
    Distribution p{0.3, 0.7};
    REQUIRE(sup_distance(p, p) == 0.0);
    REQUIRE_THROWS_AS(sup_distance(Distribution{0.5, 0.5}, Distribution{0.5, 0.25, 0.25}),
                      std::domain_error);
}

TEST_CASE("sup distance is a bounded metric", "[core]") {
    Rng rng(20240817, Stream::aux);
    for (int trial = 0; trial < 400; ++trial) {
        std::size_t size = 2 + static_cast<std::size_t>(rng.next_u64() % 4);
        Distribution p = test_helpers::random_distribution(rng, size);
        Distribution q = test_helpers::random_distribution(rng, size);
        Distribution r = test_helpers::random_distribution(rng, size);
        double pq = sup_distance(p, q), qp = sup_distance(q, p);
        REQUIRE(pq == qp);
        REQUIRE(pq >= 0.0);
        REQUIRE(pq <= 1.0);
        REQUIRE(sup_distance(p, r) <= pq + sup_distance(q, r) + 1e-15);
    }
}

TEST_CASE("cesaro means on worked values", "[core]") {
    CesaroTrace empty = cesaro_means({});
    REQUIRE(empty.size() == 0);
    REQUIRE(empty.final_mean() == 0.0);

    std::vector<double> constant(10, 0.3);
    CesaroTrace c = cesaro_means(constant);
    for (double m : c.running_means) REQUIRE(m == Catch::Approx(0.3).margin(1e-15));

    // indicator of perfect squares: mean at N is exactly
    // (floor(sqrt(N - 1)) + 1) / N, and the double arithmetic agrees bitwise
    CesaroTrace sq = cesaro_means(square_indicator(100));
    REQUIRE(sq.final_mean() == 10.0 / 100.0);

    REQUIRE_THROWS_AS(cesaro_means({0.5, 1.5}), std::domain_error);
    REQUIRE_THROWS_AS(cesaro_means({-0.1}), std::domain_error);
}

TEST_CASE("cesaro means stay exact on dyadic values", "[core]") {
    std::vector<double> v;
    for (int i = 0; i < 4000; ++i) v.push_back(i % 2 ? 0.25 : 0.0);
    CesaroTrace t = cesaro_means(v);
    // sum after an even count is an exact multiple of 0.25
    REQUIRE(t.running_means[3999] == (1000.0 * 0.25 + 1000.0 * 0.25) / 4000.0);
    REQUIRE(t.running_means[1] == 0.125);
}

TEST_CASE("cesaro means match direct summation", "[core]") {
    Rng rng(91, Stream::aux);
    std::vector<double> v(100000);
    for (double& x : v) x = rng.uniform01();
    CesaroTrace t = cesaro_means(v);

    long double sum = 0.0L;
    for (std::size_t n = 0; n < v.size(); ++n) {
        sum += static_cast<long double>(v[n]);
        auto direct = static_cast<double>(sum / static_cast<long double>(n + 1));
        REQUIRE(std::abs(t.running_means[n] - direct) < 1e-10);
    }
}

TEST_CASE("full density limit test on worked values", "[core]") {
    CesaroTrace zeros = cesaro_means(std::vector<double>(1000, 0.0));
    MergeVerdict v0 = full_density_limit_test(zeros, 0.05, 0.5);
    REQUIRE(v0.weak);
    REQUIRE(v0.strong);

    /* squares up to 1e4: 100 spikes, mean 0.01 -> weak passes at 0.05, but
     * spikes keep landing in the top half -> strong fails */
    CesaroTrace sq = cesaro_means(square_indicator(10000));
    REQUIRE(sq.final_mean() == 100.0 / 10000.0);
    MergeVerdict vs = full_density_limit_test(sq, 0.05, 0.5);
    REQUIRE(vs.weak);
    REQUIRE_FALSE(vs.strong);

    CesaroTrace ones = cesaro_means(std::vector<double>(100, 1.0));
    MergeVerdict v1 = full_density_limit_test(ones, 0.5, 0.5);
    REQUIRE_FALSE(v1.weak);
    REQUIRE_FALSE(v1.strong);

    CesaroTrace mid = cesaro_means(std::vector<double>(100, 0.4));
    MergeVerdict vm = full_density_limit_test(mid, 0.5, 0.5);
    REQUIRE(vm.weak);
    REQUIRE(vm.strong);
}

TEST_CASE("full density limit test rejects bad input", "[core]") {
    CesaroTrace t = cesaro_means({0.1, 0.2});
    REQUIRE_THROWS_AS(full_density_limit_test(CesaroTrace{}, 0.05, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(full_density_limit_test(t, 0.0, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(full_density_limit_test(t, -1.0, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(full_density_limit_test(t, 0.05, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(full_density_limit_test(t, 0.05, 1.0), std::invalid_argument);

    CesaroTrace broken;
    broken.values = {0.1, 0.2};
    broken.running_means = {0.1};
    REQUIRE_THROWS_AS(full_density_limit_test(broken, 0.05, 0.5), std::invalid_argument);
}

TEST_CASE("tail window covers exactly the trailing fraction", "[core]") {
    // 10 values, tail_fraction 0.5 -> last 5 checked; a spike at index 4
    // is outside the window, at index 5 inside
    std::vector<double> v(10, 0.0);
    v[4] = 1.0;
    REQUIRE(full_density_limit_test(cesaro_means(v), 0.5, 0.5).strong);
    v[4] = 0.0;
    v[5] = 1.0;
    REQUIRE_FALSE(full_density_limit_test(cesaro_means(v), 0.5, 0.5).strong);
}

TEST_CASE("rng substreams are decoupled and reproducible", "[core]") {
    Rng a(7, Stream::path), b(7, Stream::path), c(7, Stream::init);
    bool all_equal = true, any_equal_cross = true;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t xa = a.next_u64();
        all_equal = all_equal && (xa == b.next_u64());
        any_equal_cross = any_equal_cross && (xa == c.next_u64());
    }
    REQUIRE(all_equal);
    REQUIRE_FALSE(any_equal_cross);

    Rng u(123);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform01();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }

    // geometric_fair has the right first buckets
    Rng g(5, Stream::aux);
    long counts[3] = {0, 0, 0};
    const long n = 200000;
    for (long i = 0; i < n; ++i) {
        int k = g.geometric_fair();
        if (k < 3) ++counts[k];
    }
    REQUIRE(std::abs(static_cast<double>(counts[0]) / n - 0.5) < 0.01);
    REQUIRE(std::abs(static_cast<double>(counts[1]) / n - 0.25) < 0.01);
    REQUIRE(std::abs(static_cast<double>(counts[2]) / n - 0.125) < 0.01);
}
