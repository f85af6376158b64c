#include "pbd/moments.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pbd/fourier.hpp"

namespace pbd {

long long SplitParams::high_multiplicity() const {
    long long m = 0;
    for (const auto& c : high) m += c.multiplicity;
    return m;
}

SplitParams split(const PbdModel& model, double low_threshold, double high_threshold) {
    if (!(low_threshold > 0.0 && low_threshold <= high_threshold && high_threshold < 1.0)) {
        throw std::invalid_argument("split thresholds must satisfy 0 < lo <= hi < 1");
    }
    SplitParams out;
    out.low_threshold = low_threshold;
    out.high_threshold = high_threshold;
    for (const auto& c : model.components()) {
        if (c.p <= low_threshold) {
            out.low.push_back(c);
        } else if (c.p > high_threshold) {
            out.high.push_back(c);
        } else {
            out.middle.push_back(c);
        }
    }
    return out;
}

MomentProfile power_sums(const SplitParams& split, int lmax) {
    if (lmax < 1) throw std::invalid_argument("lmax must be >= 1");
    MomentProfile prof;
    prof.lmax = lmax;
    prof.low_power_sums.assign(static_cast<std::size_t>(lmax), 0.0);
    prof.high_power_sums.assign(static_cast<std::size_t>(lmax), 0.0);
    // Repeated multiplication, no pow() calls, for cross-platform determinism.
    for (const auto& c : split.low) {
        double term = static_cast<double>(c.multiplicity);
        for (int l = 1; l <= lmax; ++l) {
            term *= c.p;
            prof.low_power_sums[static_cast<std::size_t>(l - 1)] += term;
        }
    }
    for (const auto& c : split.high) {
        const double u = 1.0 - c.p;
        double term = static_cast<double>(c.multiplicity);
        for (int l = 1; l <= lmax; ++l) {
            term *= u;
            prof.high_power_sums[static_cast<std::size_t>(l - 1)] += term;
        }
    }
    return prof;
}

MomentBoundResult moment_bound_lhs(const MomentProfile& prof_p, const MomentProfile& prof_q,
                                   double amplification, double epsilon, double constant_c) {
    if (prof_p.lmax != prof_q.lmax) throw std::invalid_argument("profiles must share lmax");
    if (!(amplification > 0.0)) throw std::invalid_argument("amplification must be positive");
    MomentBoundResult res;
    res.entries.resize(static_cast<std::size_t>(prof_p.lmax));
    res.threshold = epsilon / (constant_c * std::log(1.0 / epsilon));
    double apow = 1.0;
    for (int l = 1; l <= prof_p.lmax; ++l) {
        apow *= amplification;
        const std::size_t i = static_cast<std::size_t>(l - 1);
        const double d = std::fabs(prof_p.low_power_sums[i] - prof_q.low_power_sums[i]) +
                         std::fabs(prof_p.high_power_sums[i] - prof_q.high_power_sums[i]);
        res.entries[i] = apow * d;
        res.max_entry = std::max(res.max_entry, res.entries[i]);
    }
    res.verdict = res.max_entry < res.threshold;
    return res;
}

std::complex<double> log1p_truncated(std::complex<double> z, int lmax) {
    // sum_{k=1}^{lmax} (-1)^{k+1} z^k / k, with an early exit once terms fall
    // below 1e-19 of the running magnitude (the remaining tail is geometric).
    std::complex<double> acc(0.0, 0.0);
    std::complex<double> zpow(1.0, 0.0);
    const double az = std::abs(z);
    double scale = 1.0;
    for (int k = 1; k <= lmax; ++k) {
        zpow *= z;
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        acc += (sign / static_cast<double>(k)) * zpow;
        scale = std::max(scale, std::abs(acc));
        if (az < 0.9 && std::abs(zpow) < 1e-19 * scale) break;
    }
    return acc;
}

std::complex<double> log_dft_taylor(const SplitParams& split, long long high_mult,
                                    long long xi, long long modulus, int lmax) {
    if (lmax < 1) throw std::invalid_argument("lmax must be >= 1");
    for (const auto& c : split.low) {
        if (c.p > 0.5) throw std::invalid_argument("low side value exceeds 1/2");
    }
    for (const auto& c : split.high) {
        if (c.p <= 0.5) throw std::invalid_argument("high side value not above 1/2");
    }
    const Complex alpha = unit_root(-xi, modulus) - 1.0;  // pairs with low values
    const Complex beta = unit_root(xi, modulus) - 1.0;    // pairs with 1 - high values
    std::complex<double> acc(0.0, 0.0);
    for (const auto& c : split.low) {
        acc += static_cast<double>(c.multiplicity) * log1p_truncated(alpha * c.p, lmax);
    }
    for (const auto& c : split.high) {
        acc += static_cast<double>(c.multiplicity) * log1p_truncated(beta * (1.0 - c.p), lmax);
    }
    // Linear phase from the high block, reduced exactly: e(-m xi / M) depends
    // only on (m xi) mod M.
    const long long r = ((high_mult % modulus) * (xi % modulus)) % modulus;
    long long rr = r < 0 ? r + modulus : r;
    if (2 * rr > modulus) rr -= modulus;
    const double phase = -2.0 * std::numbers::pi * static_cast<double>(rr) /
                         static_cast<double>(modulus);
    return acc + std::complex<double>(0.0, phase);
}

}  // namespace pbd
