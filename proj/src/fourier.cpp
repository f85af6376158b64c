#include "pbd/fourier.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pbd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long long mod_reduce(long long x, long long m) {
    long long r = x % m;
    return r < 0 ? r + m : r;
}

// Integer exponent power of a complex base by squaring, deterministic.
Complex cpow_int(Complex base, long long e) {
    Complex acc(1.0, 0.0);
    while (e > 0) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

// The learner's halfwidth can exceed M/2 in the small-variance regime; the
// coefficients are periodic mod M so any halfwidth >= 0 is meaningful.
void check_params(long long modulus, long long halfwidth) {
    if (modulus < 2) throw std::invalid_argument("modulus must be >= 2");
    if (halfwidth < 0) throw std::invalid_argument("halfwidth must be >= 0");
}

}  // namespace

Complex unit_root(long long num, long long den) {
    // Quadrant reduction keeps mirror-symmetric arguments bitwise equal
    // (e.g. e(1/4) and e(3/4) share the same cosine value exactly).
    long long r = mod_reduce(num, den);
    double sign_im = 1.0;
    if (2 * r > den) {  // conjugate half
        r = den - r;
        sign_im = -1.0;
    }
    if (4 * r <= den) {
        const double theta = kTwoPi * static_cast<double>(r) / static_cast<double>(den);
        return Complex(std::cos(theta), sign_im * std::sin(theta));
    }
    // r in (den/4, den/2]: reflect around pi/2 using the integer den - 2r.
    const double x = std::numbers::pi * static_cast<double>(den - 2 * r) /
                     static_cast<double>(den);
    return Complex(-std::cos(x), sign_im * std::sin(x));
}

FourierSketch::FourierSketch(long long modulus, long long halfwidth)
    : modulus_(modulus), halfwidth_(halfwidth) {
    check_params(modulus, halfwidth);
    coeffs_.assign(static_cast<std::size_t>(2 * halfwidth + 1), Complex(0.0, 0.0));
}

Complex FourierSketch::coeff(long long xi) const {
    if (xi < -halfwidth_ || xi > halfwidth_) throw std::out_of_range("frequency outside sketch");
    return coeffs_[static_cast<std::size_t>(xi + halfwidth_)];
}

void FourierSketch::set_coeff(long long xi, Complex value) {
    if (xi < -halfwidth_ || xi > halfwidth_) throw std::out_of_range("frequency outside sketch");
    coeffs_[static_cast<std::size_t>(xi + halfwidth_)] = value;
}

Complex FourierSketch::coeff_mod(long long xi) const {
    long long r = mod_reduce(xi, modulus_);
    if (r > halfwidth_) r -= modulus_;
    return coeff(r);
}

FourierSketch dft_of_pmf(const Pmf& p, long long modulus, long long halfwidth) {
    FourierSketch sk(modulus, halfwidth);
    for (long long xi = 0; xi <= halfwidth; ++xi) {
        Complex acc(0.0, 0.0);
        for (std::size_t i = 0; i < p.probs.size(); ++i) {
            const long long j = p.offset + static_cast<long long>(i);
            acc += p.probs[i] * unit_root(-xi * j, modulus);
        }
        sk.set_coeff(xi, acc);
        if (xi > 0) sk.set_coeff(-xi, std::conj(acc));
    }
    return sk;
}

FourierSketch dft_closed_form(const PbdModel& model, long long modulus, long long halfwidth) {
    FourierSketch sk(modulus, halfwidth);
    for (long long xi = 0; xi <= halfwidth; ++xi) {
        const Complex w = unit_root(-xi, modulus);
        Complex acc(1.0, 0.0);
        for (const auto& c : model.components()) {
            acc *= cpow_int((1.0 - c.p) + c.p * w, c.multiplicity);
        }
        sk.set_coeff(xi, acc);
        if (xi > 0) sk.set_coeff(-xi, std::conj(acc));
    }
    return sk;
}

FourierSketch empirical_dft(const SampleSet& samples, long long modulus, long long halfwidth) {
    samples.validate();
    std::vector<double> hist(static_cast<std::size_t>(modulus), 0.0);
    const double w = 1.0 / static_cast<double>(samples.values.size());
    for (long long v : samples.values) {
        hist[static_cast<std::size_t>(v % modulus)] += w;
    }
    FourierSketch sk(modulus, halfwidth);
    for (long long xi = 0; xi <= halfwidth; ++xi) {
        Complex acc(0.0, 0.0);
        for (long long r = 0; r < modulus; ++r) {
            const double h = hist[static_cast<std::size_t>(r)];
            if (h != 0.0) acc += h * unit_root(-xi * r, modulus);
        }
        if (xi == 0) acc = Complex(1.0, 0.0);
        sk.set_coeff(xi, acc);
        if (xi > 0) sk.set_coeff(-xi, std::conj(acc));
    }
    return sk;
}

double sketch_l2_sq(const FourierSketch& a, const FourierSketch& b) {
    if (a.modulus() != b.modulus() || a.halfwidth() != b.halfwidth()) {
        throw std::invalid_argument("sketch_l2_sq: mismatched modulus or halfwidth");
    }
    long double acc = 0.0L;
    for (long long xi = -a.halfwidth(); xi <= a.halfwidth(); ++xi) {
        acc += std::norm(a.coeff(xi) - b.coeff(xi));
    }
    return static_cast<double>(acc);
}

Pmf inverse_dft(const FourierSketch& sk, long long window_start, bool clamp_negative) {
    if (!sk.covers_full_period()) {
        throw std::invalid_argument("inverse_dft needs the full period: 2L+1 >= M");
    }
    const long long m = sk.modulus();
    Pmf out;
    out.offset = window_start;
    out.probs.resize(static_cast<std::size_t>(m));
    for (long long j = window_start; j < window_start + m; ++j) {
        Complex acc(0.0, 0.0);
        for (long long xi = 0; xi < m; ++xi) {
            acc += unit_root(xi * j, m) * sk.coeff_mod(xi);
        }
        out.probs[static_cast<std::size_t>(j - window_start)] =
            acc.real() / static_cast<double>(m);
    }
    if (clamp_negative) {
        long double total = 0.0L;
        for (double& v : out.probs) {
            if (v < 0.0) v = 0.0;
            total += v;
        }
        if (total > 0.0L) {
            for (double& v : out.probs) v = static_cast<double>(v / total);
        }
    }
    return out;
}

std::vector<double> fold_mod(const Pmf& p, long long modulus) {
    std::vector<double> out(static_cast<std::size_t>(modulus), 0.0);
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        const long long j = p.offset + static_cast<long long>(i);
        out[static_cast<std::size_t>(mod_reduce(j, modulus))] += p.probs[i];
    }
    return out;
}

CertifyResult certify_tv_from_sketch(const FourierSketch& a, const FourierSketch& b,
                                     double mean_gap, double var_a, double var_b,
                                     double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must be in (0, 0.5)");
    CertifyResult res;
    res.threshold = epsilon * epsilon / 16.0;
    const double ratio = (var_b + 1.0) / (var_a + 1.0);
    const bool hypothesis = std::fabs(mean_gap) <= 3.0 * (std::sqrt(std::max(0.0, var_a)) + 1.0) &&
                            ratio >= 0.25 && ratio <= 4.0;
    res.l2_sq = sketch_l2_sq(a, b);
    if (!hypothesis) {
        res.status = CertifyStatus::HypothesisNotMet;
    } else if (res.l2_sq <= res.threshold) {
        res.status = CertifyStatus::Certified;
    } else {
        res.status = CertifyStatus::NotCertified;
    }
    return res;
}

}  // namespace pbd
