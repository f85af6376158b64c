#include "pbd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pbd/fourier.hpp"

namespace pbd {

double tv_exact(const PbdModel& a, const PbdModel& b) {
    if (a.n() > 20000 || b.n() > 20000) {
        throw std::invalid_argument("tv_exact is desk-scale (n <= 20000)");
    }
    const std::vector<long double> pa = pmf_exact_ext(a);
    const std::vector<long double> pb = pmf_exact_ext(b);
    const std::size_t len = std::max(pa.size(), pb.size());
    long double acc = 0.0L;
    for (std::size_t i = 0; i < len; ++i) {
        const long double va = i < pa.size() ? pa[i] : 0.0L;
        const long double vb = i < pb.size() ? pb[i] : 0.0L;
        acc += va > vb ? va - vb : vb - va;
    }
    return static_cast<double>(acc / 2.0L);
}

ChebyshevPair chebyshev_pair(long long n) {
    if (n < 2) throw std::invalid_argument("chebyshev_pair needs n >= 2");
    std::vector<double> pv, qv;
    pv.reserve(static_cast<std::size_t>(n));
    qv.reserve(static_cast<std::size_t>(n));
    for (long long j = 1; j <= n; ++j) {
        pv.push_back((1.0 + unit_root(j, n).real()) / 8.0);
        qv.push_back((1.0 + unit_root(2 * j + 1, 2 * n).real()) / 8.0);
    }
    ChebyshevPair pair{PbdModel::from_params(pv), PbdModel::from_params(qv), 0.0};
    const long long jstar = std::max<long long>(1, std::llround(static_cast<double>(n) / 4.0));
    const double pj = pv[static_cast<std::size_t>(jstar - 1)];
    double gap = 1.0;
    for (double q : qv) gap = std::min(gap, std::fabs(pj - q));
    pair.min_param_gap = gap;
    return pair;
}

namespace {

void enumerate_grid(std::vector<double>& current, std::size_t pos, double min_value,
                    const std::vector<double>& grid, const Pmf& empirical,
                    std::vector<double>& best, double& best_tv) {
    const std::size_t n = current.size();
    if (pos == n) {
        const Pmf pmf = pmf_exact(PbdModel::from_params(current));
        const double tv = tv_distance(pmf, empirical);
        if (tv < best_tv - 1e-15) {  // strict improvement keeps the first (lex) optimum
            best_tv = tv;
            best = current;
        }
        return;
    }
    for (double g : grid) {
        if (g < min_value) continue;
        current[pos] = g;
        enumerate_grid(current, pos + 1, g, grid, empirical, best, best_tv);
    }
}

}  // namespace

PbdModel brute_force_learn(const SampleSet& samples, long long n, double grid_step) {
    if (n < 1 || n > 4) throw std::invalid_argument("brute_force_learn needs n <= 4");
    if (!(grid_step >= 0.02 && grid_step <= 0.5)) {
        throw std::invalid_argument("grid_step must be in [0.02, 0.5]");
    }
    const Pmf emp = empirical_pmf(samples);
    std::vector<double> grid;
    for (double g = 0.0; g < 1.0 + 1e-12; g += grid_step) grid.push_back(std::min(g, 1.0));
    if (grid.back() < 1.0) grid.push_back(1.0);
    std::vector<double> current(static_cast<std::size_t>(n), 0.0);
    std::vector<double> best(static_cast<std::size_t>(n), 0.0);
    double best_tv = 2.0;
    enumerate_grid(current, 0, 0.0, grid, emp, best, best_tv);
    return PbdModel::from_params(best);
}

namespace {

struct BlockShape {
    long long zeros = 0;
    long long ones = 0;
    long long m = 0;
    double p = 0.0;
};

BlockShape block_shape(const PbdModel& model) {
    BlockShape s;
    int interior = 0;
    for (const auto& c : model.components()) {
        if (c.p == 0.0) {
            s.zeros = c.multiplicity;
        } else if (c.p == 1.0) {
            s.ones = c.multiplicity;
        } else {
            ++interior;
            s.m = c.multiplicity;
            s.p = c.p;
        }
    }
    if (interior > 1) {
        throw std::invalid_argument("model is not shifted-binomial shaped");
    }
    return s;
}

double log_binom(long long m, double p, long long k) {
    if (k < 0 || k > m) return -INFINITY;
    if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return k == m ? 0.0 : -INFINITY;
    return std::lgamma(static_cast<double>(m) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(m - k) + 1.0) +
           static_cast<double>(k) * std::log(p) +
           static_cast<double>(m - k) * std::log1p(-p);
}

double pmf_at(const BlockShape& s, long long x) {
    const long long k = x - s.ones;
    if (s.m == 0) return k == 0 ? 1.0 : 0.0;
    return std::exp(log_binom(s.m, s.p, k));
}

double bernstein_tail(double variance, double w) {
    if (w <= 0.0) return 1.0;
    return 2.0 * std::exp(-(w * w) / (2.0 * (variance + w / 3.0)));
}

}  // namespace

WindowedTv tv_shifted_binomial_window(const PbdModel& a, const PbdModel& b) {
    const BlockShape sa = block_shape(a);
    const BlockShape sb = block_shape(b);
    const double mu_a = a.mean(), mu_b = b.mean();
    const double var_a = a.variance(), var_b = b.variance();
    const double wa = 12.0 * std::sqrt(var_a + 1.0);
    const double wb = 12.0 * std::sqrt(var_b + 1.0);
    const long long lo = std::max<long long>(
        0, static_cast<long long>(std::floor(std::min(mu_a - wa, mu_b - wb))) - 2);
    const long long hi = static_cast<long long>(
        std::ceil(std::max(mu_a + wa, mu_b + wb))) + 2;
    WindowedTv out;
    long double acc = 0.0L;
    for (long long x = lo; x <= hi; ++x) {
        acc += std::fabs(pmf_at(sa, x) - pmf_at(sb, x));
    }
    out.tv_window = static_cast<double>(acc / 2.0L);
    out.tail_bound = 0.5 * (bernstein_tail(var_a, wa) + bernstein_tail(var_b, wb));
    return out;
}

}  // namespace pbd
