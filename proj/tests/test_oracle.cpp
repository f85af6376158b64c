#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>

#include "pbd/learner.hpp"
#include "pbd/oracle.hpp"
#include "pbd/rng.hpp"

using namespace pbd;

TEST_CASE("tv_exact basics") {
    const auto a = PbdModel::from_components({{0.1, 1}, {0.2, 1}});
    CHECK(tv_exact(a, a) == 0.0);
    const auto zero = PbdModel::from_components({{0.0, 1}});
    const auto one = PbdModel::from_components({{1.0, 1}});
    CHECK(tv_exact(zero, one) == doctest::Approx(1.0));
    const auto b = PbdModel::from_components({{0.5, 2}});
    CHECK(tv_exact(a, b) == doctest::Approx(0.47).epsilon(1e-12));
}

TEST_CASE("chebyshev pair construction at n = 4") {
    const auto pair = chebyshev_pair(4);
    // p values: (1+cos(pi/2))/8, (1+cos(pi))/8, (1+cos(3pi/2))/8, (1+cos(2pi))/8
    //         = 0.125, 0, 0.125, 0.25
    REQUIRE(pair.p.distinct_count() == 3);
    CHECK(pair.p.components()[0].p == doctest::Approx(0.0));
    CHECK(pair.p.components()[0].multiplicity == 1);
    CHECK(pair.p.components()[1].p == doctest::Approx(0.125));
    CHECK(pair.p.components()[1].multiplicity == 2);
    CHECK(pair.p.components()[2].p == doctest::Approx(0.25));
    CHECK(pair.p.components()[2].multiplicity == 1);
    for (const auto& c : pair.q.components()) {
        CHECK(c.p >= 0.0);
        CHECK(c.p <= 0.25);
    }
}

TEST_CASE("chebyshev pair: power sums agree up to order n-1") {
    const long long n = 16;
    const auto pair = chebyshev_pair(n);
    const auto pv = pair.p.expand();
    const auto qv = pair.q.expand();
    for (int l = 1; l < n; ++l) {
        long double sp = 0.0L, sq = 0.0L;
        for (double v : pv) {
            long double t = 1.0L;
            for (int k = 0; k < l; ++k) t *= v;
            sp += t;
        }
        for (double v : qv) {
            long double t = 1.0L;
            for (int k = 0; k < l; ++k) t *= v;
            sq += t;
        }
        CHECK(std::fabs(static_cast<double>(sp - sq)) <= 1e-10);
    }
}

TEST_CASE("chebyshev pair TV decays and parameter gap stays wide") {
    double prev = 1.0;
    for (long long n : {8, 16, 24, 32}) {
        const auto pair = chebyshev_pair(n);
        const double tv = tv_exact(pair.p, pair.q);
        CHECK(tv <= prev + 1e-18);
        prev = tv;
        CHECK(pair.min_param_gap >= 1.0 / (4.0 * static_cast<double>(n)));
        if (n == 16) CHECK(tv <= 1e-3);
        if (n == 32) CHECK(tv <= 1e-6);
    }
}

TEST_CASE("brute force learner on degenerate and sampled data") {
    // empirical pmf = point mass at n -> all-ones model
    SampleSet atn{{3, 3, 3}, std::nullopt};
    const auto ones = brute_force_learn(atn, 3, 0.25);
    CHECK(ones.mean() == doctest::Approx(3.0));

    const auto model = PbdModel::from_components({{0.3, 2}});
    const auto s = sample(model, 100000, 21);
    const auto learned = brute_force_learn(s, 2, 0.05);
    for (const auto& c : learned.components()) {
        CHECK(std::fabs(c.p - 0.3) <= 0.05 + 1e-12);
    }
}

TEST_CASE("brute force learner is permutation invariant") {
    const auto model = PbdModel::from_components({{0.2, 1}, {0.7, 1}});
    auto s = sample(model, 2000, 33);
    const auto a = brute_force_learn(s, 2, 0.1);
    std::reverse(s.values.begin(), s.values.end());
    const auto b = brute_force_learn(s, 2, 0.1);
    CHECK(a == b);
    CHECK_THROWS_AS(brute_force_learn(s, 5, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_learn(s, 2, 0.001), std::invalid_argument);
}

TEST_CASE("proper learner agrees with the brute-force oracle on tiny instances") {
    Rng rng(71);
    for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> params{rng.next_double(), rng.next_double(), rng.next_double()};
        const auto model = PbdModel::from_params(params);
        LearnConfig config;
        config.epsilon = 0.1;
        config.seed = 100 + static_cast<std::uint64_t>(rep);
        const auto samples = sample(model, config.default_sample_budget(), config.seed);
        const auto report = proper_learn(samples, 3, config);
        const auto brute = brute_force_learn(samples, 3, 0.05);
        const double tv_learned = tv_exact(model, report.output);
        const double tv_brute = tv_exact(model, brute);
        CHECK(tv_learned <= tv_brute + 0.1);
    }
}

TEST_CASE("windowed TV agrees with the exact oracle at desk scale") {
    const auto a = PbdModel::from_components({{0.0, 50}, {0.3, 400}, {1.0, 20}});
    const auto b = PbdModel::from_components({{0.0, 60}, {0.31, 390}, {1.0, 20}});
    const auto w = tv_shifted_binomial_window(a, b);
    const double exact = tv_exact(a, b);
    CHECK(w.tv_window == doctest::Approx(exact).epsilon(1e-6));
    CHECK(w.tail_bound < 1e-9);
}
