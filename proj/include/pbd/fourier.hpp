#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "pbd/model.hpp"

namespace pbd {

using Complex = std::complex<double>;

// e(x) = exp(2*pi*i*x) with exact argument reduction for rational x = num/den.
Complex unit_root(long long num, long long den);

// DFT-mod-M coefficients on frequencies |xi| <= L.  The sign convention is
// P_hat(xi) = sum_j e(-xi*j/M) P(j) throughout the library.
class FourierSketch {
public:
    FourierSketch() : FourierSketch(2, 0) {}
    FourierSketch(long long modulus, long long halfwidth);

    long long modulus() const { return modulus_; }
    long long halfwidth() const { return halfwidth_; }

    Complex coeff(long long xi) const;
    void set_coeff(long long xi, Complex value);

    // Coefficient at an arbitrary residue, using periodicity mod M.  Requires
    // 2L+1 >= M so that every residue has a stored representative.
    Complex coeff_mod(long long xi) const;
    bool covers_full_period() const { return 2 * halfwidth_ + 1 >= modulus_; }

private:
    long long modulus_;
    long long halfwidth_;
    std::vector<Complex> coeffs_;  // index xi + halfwidth_
};

FourierSketch dft_of_pmf(const Pmf& p, long long modulus, long long halfwidth);

// Product formula over distinct parameters:
//   P_hat(xi) = prod_i ((1-q_i) + q_i e(-xi/M))^{m_i}
// (the paper-side product conjugated to match the e(-xi j/M) convention).
FourierSketch dft_closed_form(const PbdModel& model, long long modulus, long long halfwidth);

// h_xi = (1/N) sum_i e(-xi s_i / M).  Computed from a histogram of the
// samples mod M; coeff(-xi) = conj(coeff(xi)) holds by construction.
FourierSketch empirical_dft(const SampleSet& samples, long long modulus, long long halfwidth);

// sum_{|xi|<=L} |a(xi) - b(xi)|^2.  Throws on mismatched modulus/halfwidth.
double sketch_l2_sq(const FourierSketch& a, const FourierSketch& b);

// Inverse DFT mod M onto [window_start, window_start + M - 1].  The sketch
// must cover the full period (2L+1 >= M).  Negative values are clamped to 0
// and the result renormalized only when clamp_negative is set.
Pmf inverse_dft(const FourierSketch& sk, long long window_start, bool clamp_negative = false);

// Fold a pmf modulo M: out[j] = sum_{k = j mod M} p(k).
std::vector<double> fold_mod(const Pmf& p, long long modulus);

enum class CertifyStatus { Certified, NotCertified, HypothesisNotMet };

struct CertifyResult {
    CertifyStatus status = CertifyStatus::HypothesisNotMet;
    double l2_sq = 0.0;
    double threshold = 0.0;
    bool certified() const { return status == CertifyStatus::Certified; }
};

// TV certificate from sketch closeness: certified iff the sketch L2^2
// distance is <= eps^2/16, under the mean/variance comparability hypothesis
// |mean_gap| <= 3 (sqrt(var_a) + 1) and (var_b+1)/(var_a+1) in [1/4, 4].
CertifyResult certify_tv_from_sketch(const FourierSketch& a, const FourierSketch& b,
                                     double mean_gap, double var_a, double var_b,
                                     double epsilon);

}  // namespace pbd
