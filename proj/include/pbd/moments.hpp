#pragma once

#include <complex>
#include <vector>

#include "pbd/model.hpp"

namespace pbd {

// Components partitioned by where their value sits relative to thresholds.
// "low" holds values <= low_threshold, "high" values > high_threshold; the
// middle list is non-empty only when the thresholds differ.
struct SplitParams {
    std::vector<PbdComponent> low;
    std::vector<PbdComponent> middle;
    std::vector<PbdComponent> high;
    double low_threshold = 0.5;
    double high_threshold = 0.5;

    long long high_multiplicity() const;
};

// Power sums of the low values and of (1 - high values), orders 1..lmax.
struct MomentProfile {
    int lmax = 0;
    std::vector<double> low_power_sums;   // low_power_sums[l-1] = sum m_i v_i^l
    std::vector<double> high_power_sums;  // high_power_sums[l-1] = sum m_i (1-v_i)^l
};

struct MomentBoundResult {
    std::vector<double> entries;  // A^l (|delta low_l| + |delta high_l|)
    double max_entry = 0.0;
    double threshold = 0.0;       // eps / (C log(1/eps))
    bool verdict = false;         // all entries < threshold
};

SplitParams split(const PbdModel& model, double low_threshold, double high_threshold);

MomentProfile power_sums(const SplitParams& split, int lmax);

// Left-hand side of the moment-distance bound, its max over l, and the
// verdict "all entries < eps / (C log(1/eps))".
MomentBoundResult moment_bound_lhs(const MomentProfile& prof_p, const MomentProfile& prof_q,
                                   double amplification, double epsilon, double constant_c);

// Truncated log of the DFT at frequency xi under the e(-xi j/M) convention:
//   -2*pi*i*m*xi/M
//   + sum_{l=1}^{lmax} ((-1)^{1+l}/l) [ (e(-xi/M)-1)^l * sum m_i v_i^l
//                                     + (e(+xi/M)-1)^l * sum m_i (1-v_i)^l ]
// where m = total multiplicity of the high side.  Middle components are not
// covered (callers in the small-variance regime multiply them in exactly).
std::complex<double> log_dft_taylor(const SplitParams& split, long long high_mult,
                                    long long xi, long long modulus, int lmax);

// Truncated log(1+z): sum_{k=1}^{lmax} (-1)^{k+1} z^k / k.  Shared by the
// Taylor expansion above and the polynomial-system evaluator.
std::complex<double> log1p_truncated(std::complex<double> z, int lmax);

}  // namespace pbd
