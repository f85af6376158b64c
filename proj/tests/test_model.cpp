#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>

#include "pbd/model.hpp"
#include "pbd/rng.hpp"

using namespace pbd;

namespace {

PbdModel random_model(Rng& rng, long long n_max, int distinct_max) {
    const long long n = 1 + static_cast<long long>(rng.next_below(
        static_cast<std::uint64_t>(n_max)));
    const int k = 1 + static_cast<int>(rng.next_below(
        static_cast<std::uint64_t>(distinct_max)));
    std::vector<PbdComponent> comps;
    long long left = n;
    for (int i = 0; i < k && left > 0; ++i) {
        const long long m = (i + 1 == k) ? left
                                         : 1 + static_cast<long long>(rng.next_below(
                                               static_cast<std::uint64_t>(left)));
        comps.push_back({rng.next_double(), m});
        left -= m;
    }
    return PbdModel::from_components(std::move(comps));
}

}  // namespace

TEST_CASE("pmf_exact matches direct expansion on tiny models") {
    // Binomial(2, 1/2)
    const auto b = pmf_exact(PbdModel::from_components({{0.5, 2}}));
    REQUIRE(b.probs.size() == 3);
    CHECK(b.probs[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b.probs[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.probs[2] == doctest::Approx(0.25).epsilon(1e-12));

    // Two distinct parameters, direct product expansion.
    const auto m = pmf_exact(PbdModel::from_components({{0.1, 1}, {0.2, 1}}));
    CHECK(m.probs[0] == doctest::Approx(0.72).epsilon(1e-12));
    CHECK(m.probs[1] == doctest::Approx(0.26).epsilon(1e-12));
    CHECK(m.probs[2] == doctest::Approx(0.02).epsilon(1e-12));

    // All-ones components give a point mass at n.
    const auto ones = pmf_exact(PbdModel::from_components({{1.0, 3}}));
    CHECK(ones.probs[3] == doctest::Approx(1.0));
    CHECK(ones.probs[0] == 0.0);
}

TEST_CASE("pmf_exact by sequential folds agrees with binomial exponentiation") {
    // Multiplicity handled by m sequential folds must match the closed-form
    // binomial pmf (an independent route via exponentiation of log terms).
    const long long m = 40;
    const double p = 0.37;
    const auto pmf = pmf_exact(PbdModel::from_components({{p, m}}));
    for (long long k = 0; k <= m; ++k) {
        const double direct =
            std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                     k * std::log(p) + (m - k) * std::log1p(-p));
        CHECK(pmf.probs[static_cast<std::size_t>(k)] ==
              doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("pmf mass stays within 1e-9 up to n = 10^4") {
    Rng rng(7);
    for (int rep = 0; rep < 3; ++rep) {
        const auto model = random_model(rng, 10000, 6);
        const auto pmf = pmf_exact(model);
        CHECK(std::fabs(pmf.mass() - 1.0) <= 1e-9);
        pmf.validate();
    }
}

TEST_CASE("mean and variance closed forms") {
    const auto a = PbdModel::from_components({{0.5, 2}});
    CHECK(a.mean() == doctest::Approx(1.0));
    CHECK(a.variance() == doctest::Approx(0.5));
    const auto b = PbdModel::from_components({{1.0, 3}});
    CHECK(b.mean() == doctest::Approx(3.0));
    CHECK(b.variance() == doctest::Approx(0.0));
    const auto c = PbdModel::from_components({{0.1, 1}, {0.2, 1}});
    CHECK(c.mean() == doctest::Approx(0.3));
    CHECK(c.variance() == doctest::Approx(0.09 + 0.16));
}

TEST_CASE("closed-form moments match pmf moments") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const auto model = random_model(rng, 400, 5);
        const auto pmf = pmf_exact(model);
        long double mean = 0.0L, second = 0.0L;
        for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
            mean += static_cast<long double>(i) * pmf.probs[i];
            second += static_cast<long double>(i) * static_cast<long double>(i) * pmf.probs[i];
        }
        const double var = static_cast<double>(second - mean * mean);
        CHECK(model.mean() == doctest::Approx(static_cast<double>(mean)).epsilon(1e-8));
        CHECK(model.variance() == doctest::Approx(var).epsilon(1e-8));
    }
}

TEST_CASE("sampling determinism and degenerate models") {
    const auto zeros = sample(PbdModel::from_components({{0.0, 5}}), 3, 42);
    CHECK(zeros.values == std::vector<long long>{0, 0, 0});
    const auto ones = sample(PbdModel::from_components({{1.0, 2}}), 2, 42);
    CHECK(ones.values == std::vector<long long>{2, 2});

    const auto model = PbdModel::from_components({{0.5, 100}});
    const auto s1 = sample(model, 1000, 7);
    const auto s2 = sample(model, 1000, 7);
    CHECK(s1.values == s2.values);
    const auto s3 = sample(model, 1000, 8);
    CHECK(s1.values != s3.values);
}

TEST_CASE("sample mean concentrates (Chernoff sanity)") {
    const auto model = PbdModel::from_components({{0.5, 100}});
    const auto s = sample(model, 100000, 7);
    const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) /
                        static_cast<double>(s.values.size());
    CHECK(std::fabs(mean - 50.0) < 0.5);
}

TEST_CASE("windowed block sampler agrees with the exact path in distribution") {
    // Same seed cannot be compared across code paths; compare moments.
    std::vector<PbdComponent> comps{{0.3, 20000}};
    const auto model = PbdModel::from_components(std::move(comps));  // n > 10^4 path
    const auto s = sample(model, 20000, 3);
    const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) /
                        static_cast<double>(s.values.size());
    long double var = 0.0L;
    for (long long v : s.values) {
        var += (static_cast<long double>(v) - mean) * (static_cast<long double>(v) - mean);
    }
    var /= static_cast<long double>(s.values.size());
    CHECK(std::fabs(mean - 6000.0) < 5.0);                     // sigma_mean ~ 0.46
    CHECK(std::fabs(static_cast<double>(var) - 4200.0) < 300);  // ~5 sigma
}

TEST_CASE("tv_distance basics and alignment") {
    const auto p = pmf_exact(PbdModel::from_components({{0.1, 1}, {0.2, 1}}));
    CHECK(tv_distance(p, p) == 0.0);
    Pmf at0{0, {1.0}};
    Pmf at1{1, {1.0}};
    CHECK(tv_distance(at0, at1) == doctest::Approx(1.0));
    const auto q = pmf_exact(PbdModel::from_components({{0.5, 2}}));
    CHECK(tv_distance(p, q) == doctest::Approx(0.47).epsilon(1e-12));
}

TEST_CASE("tv_distance is a metric on random triples") {
    Rng rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = pmf_exact(random_model(rng, 50, 3));
        const auto b = pmf_exact(random_model(rng, 50, 3));
        const auto c = pmf_exact(random_model(rng, 50, 3));
        const double ab = tv_distance(a, b);
        const double ba = tv_distance(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(tv_distance(a, c) <= ab + tv_distance(b, c) + 1e-12);
    }
    const auto a = pmf_exact(random_model(rng, 30, 2));
    CHECK(tv_distance(a, a) <= 1e-12);
}

TEST_CASE("canonicalize merges duplicates and round-trips") {
    const double raw[] = {0.3, 0.3, 0.1};
    const auto m = PbdModel::from_params(raw);
    REQUIRE(m.distinct_count() == 2);
    CHECK(m.components()[0].p == 0.1);
    CHECK(m.components()[0].multiplicity == 1);
    CHECK(m.components()[1].p == 0.3);
    CHECK(m.components()[1].multiplicity == 2);

    CHECK_THROWS_AS(PbdModel::from_params({}), std::invalid_argument);
    const double extremes[] = {1.0, 0.0};
    const auto e = PbdModel::from_params(extremes);
    CHECK(e.components()[0].p == 0.0);
    CHECK(e.components()[1].p == 1.0);

    // canonicalize . expand = identity
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        const auto model = random_model(rng, 60, 4);
        const auto again = PbdModel::from_params(model.expand());
        CHECK(again == model);
    }

    CHECK_THROWS_AS(PbdModel::from_params(std::vector<double>{1.5}), std::invalid_argument);
    CHECK_THROWS_AS(PbdModel::from_components({{0.5, 0}}), std::invalid_argument);
}

TEST_CASE("near-duplicates stay distinct") {
    const auto m = PbdModel::from_components({{0.3, 1}, {0.3 + 1e-13, 1}});
    CHECK(m.distinct_count() == 2);
}
