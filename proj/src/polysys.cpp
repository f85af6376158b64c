#include "pbd/polysys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pbd/moments.hpp"
#include "pbd/optimize.hpp"

namespace pbd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSlack = 1e-9;  // absolute slack on top of every budget


struct ExpPair {
    std::complex<double> value;  // exp'(z)
    std::complex<double> deriv;  // exp'_{lmax-1}(z) = d/dz exp'(z)
};

// Forward-summed truncated exponential with its derivative E_{lmax-1}(z);
// terms past the point where they stop contributing are skipped.  Extended
// precision keeps the alternating-sum cancellation noise (~ e^|z| * ulp)
// below eps^3 for every |z| inside the evaluation guard.
template <typename Real>
ExpPair exp_truncated_sum(std::complex<double> z, int lmax) {
    static thread_local std::vector<Real> inv_k{Real(0)};
    while (static_cast<int>(inv_k.size()) <= lmax) {
        inv_k.push_back(Real(1) / static_cast<Real>(inv_k.size()));
    }
    std::complex<Real> zl(z.real(), z.imag());
    std::complex<Real> term(Real(1), Real(0));
    std::complex<Real> acc(Real(1), Real(0));
    const double az = std::abs(z);
    const Real tail = std::numeric_limits<Real>::epsilon() * Real(0.01);
    for (int k = 1; k <= lmax; ++k) {
        term *= zl * inv_k[static_cast<std::size_t>(k)];
        acc += term;
        if (static_cast<double>(k) > az && std::norm(term) < tail * tail * std::norm(acc)) {
            break;  // converged: the remaining tail is below resolution
        }
        if (k == lmax) {
            return {std::complex<double>(acc), std::complex<double>(acc - term)};
        }
    }
    return {std::complex<double>(acc), std::complex<double>(acc)};
}

// Double precision keeps the cancellation noise under eps^3 up to |z| ~ 30;
// the band up to the guard radius needs the extended-precision sum.
ExpPair exp_truncated_pair(std::complex<double> z, int lmax) {
    if (std::abs(z) <= 30.0) return exp_truncated_sum<double>(z, lmax);
    return exp_truncated_sum<long double>(z, lmax);
}

// exp' is numerically meaningful only while the cancellation noise stays
// below eps^3; past this radius every mean/variance-feasible PBD has a
// coefficient below eps^3, so the system takes q_xi = 0 there.
double exp_guard_radius(int lmax) {
    return std::min(static_cast<double>(lmax) / 3.0, 38.0);
}

// Domain-guarded q_xi evaluator.  In the small regime every ingredient of
// q_xi is periodic in xi mod M, so the frequency sum collapses onto the
// distinct residues with multiplicities; the large regime keeps one entry
// per |xi| <= L because the o_xi shift is not periodic.
class SystemEvaluator {
public:
    struct Node {
        long long xi = 0;
        std::complex<double> alpha;
        double phase = 0.0;
        double weight = 1.0;
        std::complex<double> target;
    };

    explicit SystemEvaluator(const PolySystem& sys) : sys_(sys) {
        const long long L = sys.halfwidth;
        const long long M = sys.modulus;
        const bool periodic = sys.regime == Regime::Small;
        const long long top = periodic ? std::min(L, M / 2) : L;
        nodes_.reserve(static_cast<std::size_t>(top) + 1);
        for (long long xi = 0; xi <= top; ++xi) {
            Node nd;
            nd.xi = xi;
            nd.alpha = unit_root(-xi, M) - 1.0;
            if (sys.regime == Regime::Large) {
                // Combined linear phase and o_xi shift; exact in integers.
                const double o_real =
                    sys.mu_tilde * static_cast<double>(xi) / static_cast<double>(M);
                const long long o_xi = static_cast<long long>(std::nearbyint(o_real));
                nd.phase = kTwoPi * (static_cast<double>(o_xi) -
                                     static_cast<double>(xi) *
                                         static_cast<double>(sys.phase_mult) /
                                         static_cast<double>(M));
                nd.weight = (xi == 0) ? 1.0 : 2.0;
                nd.target = sys.target.coeff(xi);
            } else {
                // Linear phase reduced exactly mod 2 pi.
                long long r = ((sys.phase_mult % M) * (xi % M)) % M;
                if (r < 0) r += M;
                if (2 * r > M) r -= M;
                nd.phase = -kTwoPi * static_cast<double>(r) / static_cast<double>(M);
                nd.weight = 0.0;  // filled below by residue counting
                nd.target = sys.target.coeff_mod(xi);
            }
            nodes_.push_back(nd);
        }
        if (periodic) {
            // count how many xi in [-L, L] land on each residue class,
            // folding conjugate classes together
            for (long long xi = -L; xi <= L; ++xi) {
                long long r = xi % M;
                if (r < 0) r += M;
                if (2 * r > M) r = M - r;  // conjugate representative
                if (r <= top) nodes_[static_cast<std::size_t>(r)].weight += 1.0;
            }
        }
        zgrad_.resize(sys.triples.size());
        mid_p_.resize(sys.mid_set.size());
        mid_pm1_.resize(sys.mid_set.size());
        inv_k_.resize(static_cast<std::size_t>(sys.lmax) + 1, 0.0);
        for (int k = 1; k <= sys.lmax; ++k) {
            inv_k_[static_cast<std::size_t>(k)] = 1.0 / static_cast<double>(k);
        }
    }

    // q_xi for one residue node (gradient optional, z exposed for tests).
    std::complex<double> q_node(std::span<const double> q, const Node& nd,
                                std::vector<std::complex<double>>* grad,
                                std::complex<double>* z_out = nullptr) const {
        const std::complex<double> a = nd.alpha;
        const std::complex<double> b = std::conj(a);
        std::complex<double> z(0.0, nd.phase);
        if (grad) std::fill(zgrad_.begin(), zgrad_.end(), std::complex<double>(0.0, 0.0));
        for (int i : sys_.low_set) {
            const auto& tr = sys_.triples[static_cast<std::size_t>(i)];
            const std::complex<double> w = a * q[static_cast<std::size_t>(i)];
            std::complex<double> lt, ltp;
            log_series(w, grad != nullptr, lt, ltp);
            z += static_cast<double>(tr.mult) * lt;
            if (grad) zgrad_[static_cast<std::size_t>(i)] = static_cast<double>(tr.mult) * a * ltp;
        }
        for (int i : sys_.high_set) {
            const auto& tr = sys_.triples[static_cast<std::size_t>(i)];
            const std::complex<double> w = b * (1.0 - q[static_cast<std::size_t>(i)]);
            std::complex<double> lt, ltp;
            log_series(w, grad != nullptr, lt, ltp);
            z += static_cast<double>(tr.mult) * lt;
            if (grad) zgrad_[static_cast<std::size_t>(i)] = -static_cast<double>(tr.mult) * b * ltp;
        }
        if (z_out) *z_out = z;

        std::complex<double> expv(0.0, 0.0);
        std::complex<double> expd(0.0, 0.0);
        if (std::abs(z) <= exp_guard_radius(sys_.lmax)) {
            const ExpPair ep = exp_truncated_pair(z, sys_.lmax);
            expv = ep.value;
            expd = ep.deriv;
        }

        std::complex<double> mid(1.0, 0.0);
        for (std::size_t mi = 0; mi < sys_.mid_set.size(); ++mi) {
            const auto& tr = sys_.triples[static_cast<std::size_t>(sys_.mid_set[mi])];
            const double qv = q[static_cast<std::size_t>(sys_.mid_set[mi])];
            const std::complex<double> base = qv * (a + 1.0) + (1.0 - qv);
            std::complex<double> pm1(1.0, 0.0);
            std::complex<double> bb = base;
            long long e = tr.mult - 1;
            while (e > 0) {
                if (e & 1) pm1 *= bb;
                bb *= bb;
                e >>= 1;
            }
            mid_pm1_[mi] = pm1;
            mid_p_[mi] = pm1 * base;
            mid *= mid_p_[mi];
        }

        const std::complex<double> qxi = expv * mid;
        if (grad) {
            for (std::size_t i = 0; i < q.size(); ++i) {
                (*grad)[i] = expd * zgrad_[i] * mid;
            }
            for (std::size_t mi = 0; mi < sys_.mid_set.size(); ++mi) {
                const int i = sys_.mid_set[mi];
                const auto& tr = sys_.triples[static_cast<std::size_t>(i)];
                std::complex<double> others(1.0, 0.0);
                for (std::size_t j = 0; j < sys_.mid_set.size(); ++j) {
                    if (j != mi) others *= mid_p_[j];
                }
                (*grad)[static_cast<std::size_t>(i)] =
                    expv * static_cast<double>(tr.mult) * a * mid_pm1_[mi] * others;
            }
        }
        return qxi;
    }

    // sum_{|xi|<=L} |q_xi - h_xi|^2 with optional gradient, using the node
    // weights so each distinct coefficient is evaluated once.
    double ft_residual(std::span<const double> q, std::span<double> grad) const {
        const bool want_grad = !grad.empty();
        if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
        long double acc = 0.0L;
        std::vector<std::complex<double>>* gp = want_grad ? &qgrad_ : nullptr;
        if (want_grad) qgrad_.resize(q.size());
        for (const Node& nd : nodes_) {
            if (nd.weight == 0.0) continue;
            const std::complex<double> d = q_node(q, nd, gp) - nd.target;
            acc += static_cast<long double>(nd.weight) * std::norm(d);
            if (want_grad) {
                for (std::size_t i = 0; i < q.size(); ++i) {
                    grad[i] += nd.weight * 2.0 *
                               (d.real() * qgrad_[i].real() + d.imag() * qgrad_[i].imag());
                }
            }
        }
        return static_cast<double>(acc);
    }

    // Public single-frequency access (any xi), used by system_dft.
    std::complex<double> q_at(std::span<const double> q, long long xi,
                              std::complex<double>* z_out = nullptr) const {
        if (sys_.regime == Regime::Small) {
            const long long M = sys_.modulus;
            long long r = xi % M;
            if (r < 0) r += M;
            const bool conj_side = 2 * r > M;
            if (conj_side) r = M - r;
            if (r >= static_cast<long long>(nodes_.size())) {
                // happens only when L < M/2 and xi reduces past the stored
                // top; extend on the fly
                Node nd;
                nd.xi = r;
                nd.alpha = unit_root(-r, M) - 1.0;
                long long ph = ((sys_.phase_mult % M) * (r % M)) % M;
                if (ph < 0) ph += M;
                if (2 * ph > M) ph -= M;
                nd.phase = -kTwoPi * static_cast<double>(ph) / static_cast<double>(M);
                nd.target = std::complex<double>(0.0, 0.0);
                std::complex<double> z;
                const auto v = q_node(q, nd, nullptr, &z);
                if (z_out) *z_out = conj_side ? std::conj(z) : z;
                return conj_side ? std::conj(v) : v;
            }
            std::complex<double> z;
            const auto v = q_node(q, nodes_[static_cast<std::size_t>(r)], nullptr, &z);
            if (z_out) *z_out = conj_side ? std::conj(z) : z;
            return conj_side ? std::conj(v) : v;
        }
        const bool neg = xi < 0;
        const long long axi = neg ? -xi : xi;
        if (axi >= static_cast<long long>(nodes_.size())) {
            throw std::out_of_range("frequency outside the system sketch");
        }
        std::complex<double> z;
        const auto v = q_node(q, nodes_[static_cast<std::size_t>(axi)], nullptr, &z);
        if (z_out) *z_out = neg ? std::conj(z) : z;
        return neg ? std::conj(v) : v;
    }

private:
    // Truncated log(1+w) and, when wanted, its derivative in one pass.  The
    // term count is fixed up front from |w| so the loop carries no test.
    void log_series(std::complex<double> w, bool want_deriv, std::complex<double>& lt,
                    std::complex<double>& ltp) const {
        std::complex<double> acc(0.0, 0.0);
        std::complex<double> dacc(0.0, 0.0);
        std::complex<double> mwpow(1.0, 0.0);  // (-w)^{k-1}
        const double aw = std::abs(w);
        int terms = sys_.lmax;
        if (aw < 0.9) {
            if (aw < 1e-19) {
                terms = 1;
            } else {
                const int needed =
                    static_cast<int>(std::ceil(-43.75 / std::log2(aw))) + 1;
                terms = std::min(terms, std::max(2, needed));
            }
        }
        for (int k = 1; k <= terms; ++k) {
            if (want_deriv) dacc += mwpow;
            acc += mwpow * w * inv_k_[static_cast<std::size_t>(k)];
            mwpow *= -w;
        }
        lt = acc;
        ltp = dacc;
    }

    const PolySystem& sys_;
    std::vector<Node> nodes_;
    std::vector<double> inv_k_;
    mutable std::vector<std::complex<double>> zgrad_;
    mutable std::vector<std::complex<double>> qgrad_;
    mutable std::vector<std::complex<double>> mid_p_;
    mutable std::vector<std::complex<double>> mid_pm1_;
};

double interval_vmin(double lo, double hi) {
    return std::min(lo * (1.0 - lo), hi * (1.0 - hi));
}

double interval_vmax(double lo, double hi) {
    if (lo <= 0.5 && 0.5 <= hi) return 0.25;
    return std::max(lo * (1.0 - lo), hi * (1.0 - hi));
}

// Deterministic Halton sequence in [0,1]^dim for multistart seeds.
double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    int i = index;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

Regime select_regime(double sigma_tilde, double epsilon) {
    const double thr = kSmallRegimeFactor * std::log(1.0 / epsilon);
    return sigma_tilde * sigma_tilde < thr ? Regime::Small : Regime::Large;
}

bool SystemResidual::feasible() const {
    if (!(mean_slack >= -kSlack) || !(var_slack >= -kSlack)) return false;
    for (double b : box_violations) {
        if (b > kSlack) return false;
    }
    return ft_residual <= ft_budget + kSlack;
}

PolySystem build_system(const MultiplicityMultiset& ms, const FourierSketch& target,
                        double mu_tilde, double sigma_tilde, long long modulus,
                        long long halfwidth, int lmax, double epsilon, Regime regime) {
    if (target.modulus() != modulus || target.halfwidth() != halfwidth) {
        throw std::invalid_argument("target sketch does not match modulus/halfwidth");
    }
    for (long long xi = 1; xi <= halfwidth; ++xi) {
        if (std::abs(target.coeff(-xi) - std::conj(target.coeff(xi))) > 1e-9) {
            throw std::invalid_argument("target sketch must be conjugate symmetric");
        }
    }
    PolySystem sys;
    sys.regime = regime;
    sys.mu_tilde = mu_tilde;
    sys.sigma_tilde = sigma_tilde;
    sys.epsilon = epsilon;
    sys.modulus = modulus;
    sys.halfwidth = halfwidth;
    sys.lmax = lmax;
    sys.ones = ms.ones;
    sys.zeros = ms.zeros;
    sys.n = ms.total_multiplicity();
    sys.phase_mult = ms.ones;
    sys.target = target;
    for (const auto& tr : ms.triples) {
        if (tr.lo < 0.5 && tr.hi > 0.5) {
            throw std::invalid_argument("triple box straddles 1/2: regime mismatch");
        }
        const int idx = static_cast<int>(sys.triples.size());
        sys.triples.push_back({tr.lo, tr.hi, tr.mult});
        const bool above_half = tr.lo >= 0.5 && tr.hi > 0.5;
        if (regime == Regime::Large) {
            if (above_half) {
                sys.high_set.push_back(idx);
            } else {
                sys.low_set.push_back(idx);
            }
        } else {
            if (tr.hi <= 0.25) {
                sys.low_set.push_back(idx);
            } else if (tr.lo >= 0.75) {
                sys.high_set.push_back(idx);
            } else {
                sys.mid_set.push_back(idx);
            }
        }
    }
    // Only parameters whose factor is rewritten through the 1-q series carry
    // the extracted linear phase; middle factors keep it inside the product.
    for (int i : sys.high_set) {
        sys.phase_mult += sys.triples[static_cast<std::size_t>(i)].mult;
    }
    return sys;
}

std::complex<double> exp_truncated(std::complex<double> z, int lmax) {
    if (lmax < 0) throw std::invalid_argument("lmax must be >= 0");
    std::complex<double> term(1.0, 0.0);
    std::complex<double> acc(1.0, 0.0);
    for (int k = 1; k <= lmax; ++k) {
        term *= z / static_cast<double>(k);
        acc += term;
    }
    return acc;
}

std::complex<double> system_dft(const PolySystem& sys, std::span<const double> assignment,
                                long long xi) {
    if (assignment.size() != sys.variable_count()) {
        throw std::invalid_argument("assignment size mismatch");
    }
    SystemEvaluator ev(sys);
    return ev.q_at(assignment, xi);
}

std::complex<double> system_log_argument(const PolySystem& sys,
                                         std::span<const double> assignment, long long xi) {
    if (assignment.size() != sys.variable_count()) {
        throw std::invalid_argument("assignment size mismatch");
    }
    SystemEvaluator ev(sys);
    std::complex<double> z;
    ev.q_at(assignment, xi, &z);
    return z;
}

double exp_accuracy_radius(int lmax) { return exp_guard_radius(lmax); }

namespace {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

MeanVar assignment_moments(const PolySystem& sys, std::span<const double> q) {
    MeanVar mv;
    mv.mean = static_cast<double>(sys.ones);
    for (std::size_t i = 0; i < sys.triples.size(); ++i) {
        mv.mean += static_cast<double>(sys.triples[i].mult) * q[i];
        mv.var += static_cast<double>(sys.triples[i].mult) * q[i] * (1.0 - q[i]);
    }
    return mv;
}

double ft_residual_value(const PolySystem& sys, const SystemEvaluator& ev,
                         std::span<const double> q) {
    (void)sys;
    return ev.ft_residual(q, std::span<double>());
}

}  // namespace

SystemResidual residual(const PolySystem& sys, std::span<const double> assignment) {
    if (assignment.size() != sys.variable_count()) {
        throw std::invalid_argument("assignment size mismatch");
    }
    SystemEvaluator ev(sys);
    SystemResidual res;
    res.ft_budget = sys.ft_budget();
    const MeanVar mv = assignment_moments(sys, assignment);
    const double mean_lo = sys.mu_tilde - 2.0 * sys.sigma_tilde;
    const double mean_hi = sys.mu_tilde + 2.0 * sys.sigma_tilde;
    const double var_lo = sys.sigma_tilde * sys.sigma_tilde / 2.0 - 1.0;
    const double var_hi = 2.0 * sys.sigma_tilde * sys.sigma_tilde;
    res.mean_slack = std::min(mv.mean - mean_lo, mean_hi - mv.mean);
    res.var_slack = std::min(mv.var - var_lo, var_hi - mv.var);
    res.box_violations.assign(sys.variable_count(), 0.0);
    for (std::size_t i = 0; i < sys.triples.size(); ++i) {
        res.box_violations[i] = std::max(
            {0.0, sys.triples[i].lo - assignment[i], assignment[i] - sys.triples[i].hi});
    }
    res.ft_residual = ft_residual_value(sys, ev, assignment);
    return res;
}

bool prefilter_feasible(const PolySystem& sys) {
    double mean_min = static_cast<double>(sys.ones);
    double mean_max = static_cast<double>(sys.ones);
    double var_min = 0.0, var_max = 0.0;
    for (const auto& tr : sys.triples) {
        mean_min += static_cast<double>(tr.mult) * tr.lo;
        mean_max += static_cast<double>(tr.mult) * tr.hi;
        var_min += static_cast<double>(tr.mult) * interval_vmin(tr.lo, tr.hi);
        var_max += static_cast<double>(tr.mult) * interval_vmax(tr.lo, tr.hi);
    }
    const double mean_lo = sys.mu_tilde - 2.0 * sys.sigma_tilde;
    const double mean_hi = sys.mu_tilde + 2.0 * sys.sigma_tilde;
    const double var_lo = sys.sigma_tilde * sys.sigma_tilde / 2.0 - 1.0;
    const double var_hi = 2.0 * sys.sigma_tilde * sys.sigma_tilde;
    return mean_min <= mean_hi + kSlack && mean_max >= mean_lo - kSlack &&
           var_min <= var_hi + kSlack && var_max >= var_lo - kSlack;
}

std::optional<std::vector<double>> solve(const PolySystem& sys, double precision,
                                         const SolveOptions& opts) {
    if (!(precision > 0.0)) throw std::invalid_argument("precision must be positive");
    if (!prefilter_feasible(sys)) return std::nullopt;
    const std::size_t dim = sys.variable_count();
    if (dim == 0) {
        std::vector<double> empty;
        if (residual(sys, empty).feasible()) return empty;
        return std::nullopt;
    }

    SystemEvaluator ev(sys);
    const double budget = sys.ft_budget();
    const double mean_lo = sys.mu_tilde - 2.0 * sys.sigma_tilde;
    const double mean_hi = sys.mu_tilde + 2.0 * sys.sigma_tilde;
    const double var_lo = sys.sigma_tilde * sys.sigma_tilde / 2.0 - 1.0;
    const double var_hi = 2.0 * sys.sigma_tilde * sys.sigma_tilde;
    const double mscale = 1.0 / std::max(1.0, sys.sigma_tilde);
    const double vscale = 1.0 / std::max(1.0, sys.sigma_tilde * sys.sigma_tilde);

    // grad may be empty: scan-only evaluations skip the gradient work.
    const auto objective = [&](std::span<const double> x, std::span<double> grad) {
        const bool want_grad = !grad.empty();
        double f = ev.ft_residual(x, grad) / budget;
        if (want_grad) {
            for (std::size_t i = 0; i < dim; ++i) grad[i] /= budget;
        }

        double mean = static_cast<double>(sys.ones), var = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            mean += static_cast<double>(sys.triples[i].mult) * x[i];
            var += static_cast<double>(sys.triples[i].mult) * x[i] * (1.0 - x[i]);
        }
        const double hm = std::max({0.0, mean_lo - mean, mean - mean_hi}) * mscale;
        const double hv = std::max({0.0, var_lo - var, var - var_hi}) * vscale;
        f += 25.0 * (hm * hm + hv * hv);
        if (want_grad && hm > 0.0) {
            const double sgn = (mean < mean_lo) ? -1.0 : 1.0;
            for (std::size_t i = 0; i < dim; ++i) {
                grad[i] += 50.0 * hm * mscale * sgn * static_cast<double>(sys.triples[i].mult);
            }
        }
        if (want_grad && hv > 0.0) {
            const double sgn = (var < var_lo) ? -1.0 : 1.0;
            for (std::size_t i = 0; i < dim; ++i) {
                grad[i] += 50.0 * hv * vscale * sgn *
                           static_cast<double>(sys.triples[i].mult) * (1.0 - 2.0 * x[i]);
            }
        }
        return f;
    };
    const auto value_at = [&](const std::vector<double>& x) {
        return objective(x, std::span<double>());
    };

    std::vector<double> lo(dim), hi(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        lo[i] = sys.triples[i].lo;
        hi[i] = sys.triples[i].hi;
    }

    // Heuristic start: spread the remaining mean over the free variables.
    std::vector<double> heur(dim);
    {
        double mass = 0.0;
        for (std::size_t i = 0; i < dim; ++i) mass += static_cast<double>(sys.triples[i].mult);
        const double want =
            mass > 0.0
                ? std::clamp((sys.mu_tilde - static_cast<double>(sys.ones)) / mass, 0.0, 1.0)
                : 0.5;
        for (std::size_t i = 0; i < dim; ++i) heur[i] = std::clamp(want, lo[i], hi[i]);
    }

    std::vector<std::pair<double, std::vector<double>>> scored;
    if (dim == 1) {
        // Coarse grid plus a fine scan around the mean-matching hint; the
        // Fourier landscape oscillates on the scale M/(2 pi m L), so the
        // fine scan is what actually locates the dip.
        for (int g = 0; g <= 32; ++g) {
            std::vector<double> pt{lo[0] + (hi[0] - lo[0]) * static_cast<double>(g) / 32.0};
            scored.push_back({value_at(pt), pt});
        }
        const double h = (hi[0] - lo[0]) / 300.0;
        for (int g = -14; g <= 14; ++g) {
            std::vector<double> pt{std::clamp(heur[0] + h * g, lo[0], hi[0])};
            scored.push_back({value_at(pt), pt});
        }
    } else {
        scored.push_back({value_at(heur), heur});
        std::vector<double> mid(dim);
        for (std::size_t i = 0; i < dim; ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
        scored.push_back({value_at(mid), mid});
        const int extra =
            std::min(opts.multistarts, 8 + 4 * static_cast<int>(dim)) - 2;
        for (int s = 0; s < extra; ++s) {
            std::vector<double> x(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                const double u = halton(s + 1, kPrimes[i % std::size(kPrimes)]);
                x[i] = lo[i] + u * (hi[i] - lo[i]);
            }
            scored.push_back({value_at(x), std::move(x)});
        }
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const double refine_gate = opts.early_abort ? 100.0 : 1e300;
    const int refine_count = dim == 1 ? 2 : std::max(2, static_cast<int>(scored.size()) / 2);

    MinimizeOptions mopts;
    mopts.max_iters = std::min(opts.max_iters, 40);
    if (opts.early_abort) {
        mopts.f_abort = 60.0;
        mopts.abort_after = 8;
    }

    for (int s = 0; s < refine_count && s < static_cast<int>(scored.size()); ++s) {
        if (scored[static_cast<std::size_t>(s)].first > refine_gate && s > 0) break;
        auto res = minimize_box(objective, scored[static_cast<std::size_t>(s)].second, lo,
                                hi, mopts);
        if (res.f <= 1.5) {
            MinimizeOptions polish;
            polish.max_iters = 60;
            polish.grad_tol = std::min(1e-12, precision * 1e-3);
            res = minimize_box(objective, res.x, lo, hi, polish);
        }
        const SystemResidual check = residual(sys, res.x);
        if (check.feasible()) return res.x;
    }
    return std::nullopt;
}

}  // namespace pbd
