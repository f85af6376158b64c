#include "pbd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pbd/rng.hpp"

namespace pbd {

PbdModel corpus_model(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xc0a905ull));
    const long long n = 1 + static_cast<long long>(rng.next_below(500));
    const int style = static_cast<int>(seed % 6);
    std::vector<PbdComponent> comps;

    switch (style) {
        case 0: {  // point mass: all parameters 0 or 1
            const long long t = static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>(n) + 1));
            if (t > 0) comps.push_back({1.0, t});
            if (n - t > 0) comps.push_back({0.0, n - t});
            break;
        }
        case 1: {  // one binomial block over every component
            const double q = 0.2 + 0.6 * rng.next_double();
            comps.push_back({q, n});
            break;
        }
        case 2: {  // one block plus ones and zeros padding
            const double q = 0.25 + 0.5 * rng.next_double();
            long long m = 1 + static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>(n)));
            long long ones = static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>(n - m) + 1));
            const long long zeros = n - m - ones;
            comps.push_back({q, m});
            if (ones > 0) comps.push_back({1.0, ones});
            if (zeros > 0) comps.push_back({0.0, zeros});
            break;
        }
        case 3: {  // two blocks plus zeros
            const double q1 = 0.2 + 0.25 * rng.next_double();
            const double q2 = 0.55 + 0.3 * rng.next_double();
            long long m1 = 1 + static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>((n + 1) / 2)));
            long long m2 = 1 + static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>(std::max<long long>(1, n - m1))));
            m2 = std::min(m2, n - m1);
            if (m2 < 1) m2 = 0;
            const long long zeros = n - m1 - m2;
            comps.push_back({q1, m1});
            if (m2 > 0) comps.push_back({q2, m2});
            if (zeros > 0) comps.push_back({0.0, zeros});
            break;
        }
        case 4: {  // tiny instance with a handful of arbitrary parameters
            const long long nn = 1 + static_cast<long long>(rng.next_below(8));
            for (long long i = 0; i < nn; ++i) {
                comps.push_back({rng.next_double(), 1});
            }
            return PbdModel::from_components(std::move(comps));
        }
        default: {  // small tail block next to 0 plus a mid block
            const double q = 0.01 + 0.07 * rng.next_double();
            // keep the tail mass modest: m q <= 6
            const long long cap = std::max<long long>(
                1, std::min<long long>(n / 2, static_cast<long long>(6.0 / q)));
            const long long m = 1 + static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>(cap)));
            const double qmid = 0.35 + 0.3 * rng.next_double();
            const long long mid = std::min<long long>(
                n - m, 60 + static_cast<long long>(rng.next_below(120)));
            const long long ones = static_cast<long long>(rng.next_below(
                static_cast<std::uint64_t>(std::min<long long>(n - m - mid, 30) + 1)));
            const long long zeros = n - m - mid - ones;
            comps.push_back({q, m});
            if (mid > 0) comps.push_back({qmid, mid});
            if (ones > 0) comps.push_back({1.0, ones});
            if (zeros > 0) comps.push_back({0.0, zeros});
            break;
        }
    }
    return PbdModel::from_components(std::move(comps));
}

}  // namespace pbd
