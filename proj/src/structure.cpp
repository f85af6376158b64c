#include "pbd/structure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "pbd/optimize.hpp"
#include "pbd/rng.hpp"

namespace pbd {

namespace {

double box_vmin(double lo, double hi) {
    // min of q(1-q) over [lo, hi] is attained at an endpoint
    return std::min(lo * (1.0 - lo), hi * (1.0 - hi));
}

double box_vmax(double lo, double hi) {
    if (lo <= 0.5 && 0.5 <= hi) return 0.25;
    return std::max(lo * (1.0 - lo), hi * (1.0 - hi));
}

}  // namespace

std::string Band::name() const {
    switch (kind) {
        case BandKind::Zero: return "zero";
        case BandKind::One: return "one";
        case BandKind::Interval: break;
    }
    return (j_side ? "J" : "I") + std::to_string(level);
}

IntervalScheme IntervalScheme::build(double variance_estimate, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::invalid_argument("epsilon must be in (0, 1/2)");
    }
    if (variance_estimate < 0.0) throw std::invalid_argument("variance must be >= 0");
    IntervalScheme s;
    s.epsilon_ = epsilon;
    s.variance_ = variance_estimate == 0.0 ? 1.0 : variance_estimate;
    const double log_inv = std::log(1.0 / epsilon);
    s.rate_ = std::min(0.25, std::sqrt(log_inv / s.variance_));
    const double eps3 = epsilon * epsilon * epsilon;
    s.levels_.push_back(s.rate_);
    while (s.levels_.back() > eps3) {
        s.levels_.push_back(s.levels_.back() * s.levels_.back());
    }
    s.depth_ = static_cast<int>(s.levels_.size()) - 1;
    const int depth_bound =
        static_cast<int>(std::ceil(std::log2(3.0 * log_inv / std::log(1.0 / s.rate_)))) + 1;
    if (s.depth_ > std::max(1, depth_bound)) {
        throw std::logic_error("interval scheme depth exceeds its bound");
    }
    for (int i = 0; i <= s.depth_; ++i) {
        const double b = s.levels_[static_cast<std::size_t>(i)];
        s.dcaps_.push_back(static_cast<long long>(
            std::ceil(kDistinctCapC1 * log_inv / std::log(1.0 / b))));
        const double cc = std::floor(kCountCapFactor * s.variance_ / b);
        s.ccaps_.push_back(cc > 4e18 ? static_cast<long long>(4e18)
                                     : static_cast<long long>(cc));
    }
    return s;
}

long long IntervalScheme::distinct_cap(int level) const {
    if (level == depth_ + 1) return 1;
    return dcaps_.at(static_cast<std::size_t>(level));
}

long long IntervalScheme::count_cap(int level) const {
    if (level == depth_ + 1) return 1;
    return ccaps_.at(static_cast<std::size_t>(level));
}

Band IntervalScheme::classify(double value) const {
    if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("value outside [0,1]");
    if (value == 0.0) return {BandKind::Zero, false, 0};
    if (value == 1.0) return {BandKind::One, false, 0};
    const bool j_side = value > 0.5;
    const double u = j_side ? 1.0 - value : value;
    // u in (0, 1/2]: level 0 covers [B_0, 1/2], level i >= 1 covers
    // [B_i, B_{i-1}), level depth+1 covers (0, B_depth)
    if (u >= levels_[0]) return {BandKind::Interval, j_side, 0};
    for (int i = 1; i <= depth_; ++i) {
        if (u >= levels_[static_cast<std::size_t>(i)]) return {BandKind::Interval, j_side, i};
    }
    return {BandKind::Interval, j_side, depth_ + 1};
}

std::pair<double, double> IntervalScheme::band_box(const Band& band) const {
    switch (band.kind) {
        case BandKind::Zero: return {0.0, 0.0};
        case BandKind::One: return {1.0, 1.0};
        case BandKind::Interval: break;
    }
    double lo, hi;
    if (band.level == 0) {
        lo = levels_[0];
        hi = 0.5;
    } else if (band.level <= depth_) {
        lo = levels_[static_cast<std::size_t>(band.level)];
        hi = levels_[static_cast<std::size_t>(band.level - 1)];
    } else {
        lo = 0.0;
        hi = levels_[static_cast<std::size_t>(depth_)];
    }
    if (band.j_side) return {1.0 - hi, 1.0 - lo};
    return {lo, hi};
}

long long MultiplicityMultiset::total_multiplicity() const {
    long long t = ones + zeros;
    for (const auto& tr : triples) t += tr.mult;
    return t;
}

long long MultiplicityMultiset::interval_mass() const {
    long long t = 0;
    for (const auto& tr : triples) t += tr.mult;
    return t;
}

long long ones_window(long long n, double epsilon) {
    const double w = std::ceil(1.0 / (epsilon * epsilon * epsilon));
    return std::min(n, w > 4e18 ? static_cast<long long>(4e18) : static_cast<long long>(w));
}

bool admits(const IntervalScheme& scheme, const MultiplicityMultiset& ms, long long n,
            double mu_tilde) {
    if (ms.ones < 0 || ms.zeros < 0) return false;
    if (ms.total_multiplicity() != n) return false;
    const long long w = ones_window(n, scheme.epsilon());
    const long long center = static_cast<long long>(std::floor(mu_tilde));
    if (std::llabs(ms.ones - center) > w) return false;
    if (static_cast<double>(ms.triples.size()) >
        kTotalTriplesC2 * std::log(1.0 / scheme.epsilon())) {
        return false;
    }
    std::map<std::pair<bool, int>, std::pair<long long, long long>> per_band;  // count, mass
    for (const auto& tr : ms.triples) {
        if (tr.band.kind != BandKind::Interval) return false;
        if (tr.band.level < 0 || tr.band.level > scheme.depth() + 1) return false;
        const auto box = scheme.band_box(tr.band);
        if (tr.lo != box.first || tr.hi != box.second) return false;
        if (tr.mult < 1) return false;
        auto& slot = per_band[{tr.band.j_side, tr.band.level}];
        slot.first += 1;
        slot.second += tr.mult;
    }
    for (const auto& [key, v] : per_band) {
        const int level = key.second;
        if (v.first > scheme.distinct_cap(level)) return false;
        if (v.second > scheme.count_cap(level)) return false;
    }
    return true;
}

MultisetEnumerator::MultisetEnumerator(const IntervalScheme& scheme, long long n,
                                       double mu_tilde,
                                       std::optional<EnumerationWindows> windows)
    : scheme_(scheme), n_(n), mu_tilde_(mu_tilde), windows_(std::move(windows)) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    // Slot order: I0, J0, I1, J1, ..., I_{D+1}, J_{D+1}.
    for (int level = 0; level <= scheme.depth() + 1; ++level) {
        for (int side = 0; side < 2; ++side) {
            Band b{BandKind::Interval, side == 1, level};
            const auto box = scheme.band_box(b);
            Slot s;
            s.band = b;
            s.lo = box.first;
            s.hi = box.second;
            s.vmin = box_vmin(s.lo, s.hi);
            s.vmax = box_vmax(s.lo, s.hi);
            s.dcap = scheme.distinct_cap(level);
            s.ccap = std::min<long long>(scheme.count_cap(level), n);
            slots_.push_back(s);
            k_max_ += std::min(s.dcap, s.ccap);
        }
    }
    const double c2cap = kTotalTriplesC2 * std::log(1.0 / scheme.epsilon());
    k_max_ = std::min<long long>(k_max_, static_cast<long long>(c2cap));
    k_max_ = std::min(k_max_, n);
    ones_center_ = std::clamp<long long>(static_cast<long long>(std::floor(mu_tilde)), 0, n);
    ones_halfwidth_ = ones_window(n, scheme.epsilon());
    k_ = -1;
}

// Spiral over the ones count: center, center+1, center-1, center+2, ...
bool MultisetEnumerator::advance_ones() {
    while (true) {
        ++ones_step_;
        const long long delta = (static_cast<long long>(ones_step_) + 1) / 2;
        if (delta > ones_halfwidth_) return false;
        const long long o =
            (ones_step_ % 2 == 1) ? ones_center_ + delta : ones_center_ - delta;
        if (o < 0 || o > n_) continue;
        ones_ = o;
        return true;
    }
}

bool MultisetEnumerator::first_combo() {
    combo_.assign(slots_.size(), 0);
    long long rem = k_;
    for (std::size_t i = 0; i < slots_.size() && rem > 0; ++i) {
        const long long c = std::min({slots_[i].dcap, slots_[i].ccap, rem});
        combo_[i] = c;
        rem -= c;
    }
    if (rem > 0) return false;
    combo_active_ = true;
    if (first_masses()) return true;
    return advance_combo();
}

// Next composition of k_ across slot capacities, reverse-lexicographic.
bool MultisetEnumerator::advance_combo() {
    if (!combo_active_) return false;
    const std::size_t nslots = slots_.size();
    while (true) {
        long long tail = 0;
        std::size_t idx = nslots;
        for (std::size_t i = nslots; i-- > 0;) {
            tail += combo_[i];
            if (i + 1 >= nslots || combo_[i] == 0) continue;
            long long cap_after = 0;
            for (std::size_t j = i + 1; j < nslots; ++j) {
                cap_after += std::min(slots_[j].dcap, slots_[j].ccap);
            }
            if (cap_after >= tail - combo_[i] + 1) {
                idx = i;
                break;
            }
        }
        if (idx == nslots) {
            combo_active_ = false;
            return false;
        }
        long long move = tail - combo_[idx] + 1;
        combo_[idx] -= 1;
        for (std::size_t j = idx + 1; j < nslots; ++j) combo_[j] = 0;
        for (std::size_t j = idx + 1; j < nslots && move > 0; ++j) {
            const long long c = std::min({slots_[j].dcap, slots_[j].ccap, move});
            combo_[j] = c;
            move -= c;
        }
        if (first_masses()) return true;
    }
}

// Masses for the current combo: per slot a non-increasing tuple of positive
// integers with slot sum <= ccap and global interval mass <= n - ones.
bool MultisetEnumerator::first_masses() {
    masses_.assign(slots_.size(), {});
    long long total = 0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (combo_[i] > slots_[i].ccap) return false;
        masses_[i].assign(static_cast<std::size_t>(combo_[i]), 1);
        total += combo_[i];
    }
    if (ones_ + total > n_) return false;
    if (leaf_ok()) return true;
    return advance_masses();
}

// Interval-arithmetic reachability of the mean/variance windows for the
// current full assignment of masses.
bool MultisetEnumerator::leaf_ok() const {
    ++steps_;
    if (!windows_) return true;
    double mean_lo = static_cast<double>(ones_), mean_hi = static_cast<double>(ones_);
    double var_lo = 0.0, var_hi = 0.0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        long long mass = 0;
        for (long long m : masses_[i]) mass += m;
        if (mass == 0) continue;
        mean_lo += static_cast<double>(mass) * slots_[i].lo;
        mean_hi += static_cast<double>(mass) * slots_[i].hi;
        var_lo += static_cast<double>(mass) * slots_[i].vmin;
        var_hi += static_cast<double>(mass) * slots_[i].vmax;
    }
    const auto& w = *windows_;
    return mean_lo <= w.mean_hi && mean_hi >= w.mean_lo && var_lo <= w.var_hi &&
           var_hi >= w.var_lo;
}

bool MultisetEnumerator::advance_masses() {
    while (true) {
        if (step_cap_ > 0 && steps_ > step_cap_) {
            hit_step_cap_ = true;
            return false;
        }
        bool advanced = false;
        for (std::size_t si = slots_.size(); si-- > 0 && !advanced;) {
            auto& tuple = masses_[si];
            if (tuple.empty()) continue;
            for (std::size_t pi = tuple.size(); pi-- > 0 && !advanced;) {
                const long long new_val = tuple[pi] + 1;
                if (pi > 0 && new_val > tuple[pi - 1]) continue;  // non-increasing
                long long slot_sum = 0;
                for (std::size_t j = 0; j < pi; ++j) slot_sum += tuple[j];
                slot_sum += new_val;
                slot_sum += static_cast<long long>(tuple.size() - pi - 1);
                if (slot_sum > slots_[si].ccap) continue;
                long long total = ones_ + slot_sum;
                for (std::size_t j = 0; j < slots_.size(); ++j) {
                    if (j == si) continue;
                    if (j < si) {
                        for (long long m : masses_[j]) total += m;
                    } else {
                        total += static_cast<long long>(masses_[j].size());
                    }
                }
                if (total > n_) continue;
                tuple[pi] = new_val;
                for (std::size_t j = pi + 1; j < tuple.size(); ++j) tuple[j] = 1;
                for (std::size_t j = si + 1; j < slots_.size(); ++j) {
                    std::fill(masses_[j].begin(), masses_[j].end(), 1LL);
                }
                advanced = true;
            }
        }
        if (!advanced) return false;
        if (leaf_ok()) return true;
    }
}

MultiplicityMultiset MultisetEnumerator::make_current() const {
    MultiplicityMultiset ms;
    ms.ones = ones_;
    long long total = ones_;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        for (long long m : masses_[i]) {
            ms.triples.push_back({slots_[i].band, slots_[i].lo, slots_[i].hi, m});
            total += m;
        }
    }
    ms.zeros = n_ - total;
    return ms;
}

std::optional<MultiplicityMultiset> MultisetEnumerator::next() {
    if (exhausted_) return std::nullopt;
    if (k_ >= 0 && combo_active_) {
        if (advance_masses()) return make_current();
        if (!hit_step_cap_ && advance_combo()) return make_current();
    }
    while (!hit_step_cap_) {
        if (k_ < 0 || !advance_ones()) {
            ++k_;
            if (k_ > k_max_) break;
            ones_step_ = -1;
            if (!advance_ones()) break;
        }
        if (ones_ + k_ > n_) continue;  // not enough mass left for k triples
        if (first_combo()) return make_current();
    }
    exhausted_ = true;
    return std::nullopt;
}

double count_multisets_log10(const IntervalScheme& scheme, long long n, double mu_tilde) {
    if (n > 200000) throw std::invalid_argument("count_multisets_log10 is a desk-scale oracle");
    const std::size_t nn = static_cast<std::size_t>(n);
    // conv[w] = number of interval-triple configurations with total mass w
    std::vector<double> conv(nn + 1, 0.0);
    conv[0] = 1.0;
    for (int level = 0; level <= scheme.depth() + 1; ++level) {
        for (int side = 0; side < 2; ++side) {
            (void)side;
            std::vector<double> slot(nn + 1, 0.0);
            if (level == scheme.depth() + 1) {
                slot[0] = 1.0;
                if (nn >= 1) slot[1] = 1.0;
            } else {
                const long long ccap = std::min<long long>(scheme.count_cap(level), n);
                const long long dcap = scheme.distinct_cap(level);
                // partitions of w into at most dcap parts, via conjugation
                std::vector<double> p(static_cast<std::size_t>(ccap) + 1, 0.0);
                p[0] = 1.0;
                for (long long part = 1; part <= dcap; ++part) {
                    for (long long w = part; w <= ccap; ++w) {
                        p[static_cast<std::size_t>(w)] += p[static_cast<std::size_t>(w - part)];
                    }
                }
                for (long long w = 0; w <= std::min<long long>(ccap, n); ++w) {
                    slot[static_cast<std::size_t>(w)] = p[static_cast<std::size_t>(w)];
                }
            }
            std::vector<double> out(nn + 1, 0.0);
            for (std::size_t a = 0; a <= nn; ++a) {
                if (conv[a] == 0.0) continue;
                for (std::size_t b = 0; a + b <= nn; ++b) {
                    if (slot[b] != 0.0) out[a + b] += conv[a] * slot[b];
                }
            }
            conv = std::move(out);
        }
    }
    std::vector<double> prefix(nn + 2, 0.0);
    for (std::size_t w = 0; w <= nn; ++w) prefix[w + 1] = prefix[w] + conv[w];
    const long long center =
        std::clamp<long long>(static_cast<long long>(std::floor(mu_tilde)), 0, n);
    const long long hw = ones_window(n, scheme.epsilon());
    double total = 0.0;
    for (long long o = std::max<long long>(0, center - hw);
         o <= std::min<long long>(n, center + hw); ++o) {
        total += prefix[static_cast<std::size_t>(n - o) + 1];
    }
    return std::log10(total);
}

MultiplicityMultiset classify_model(const IntervalScheme& scheme, const PbdModel& model) {
    MultiplicityMultiset ms;
    for (const auto& c : model.components()) {
        const Band b = scheme.classify(c.p);
        if (b.kind == BandKind::Zero) {
            ms.zeros += c.multiplicity;
        } else if (b.kind == BandKind::One) {
            ms.ones += c.multiplicity;
        } else {
            const auto box = scheme.band_box(b);
            ms.triples.push_back({b, box.first, box.second, c.multiplicity});
        }
    }
    return ms;
}

// ---------------------------------------------------------------------------
// Sparsifier
// ---------------------------------------------------------------------------

namespace {

struct WorkingComponents {
    std::vector<PbdComponent> comps;  // sorted by value, values distinct

    void add(double p, long long mult) {
        if (mult <= 0) return;
        auto it = std::lower_bound(
            comps.begin(), comps.end(), p,
            [](const PbdComponent& c, double v) { return c.p < v; });
        if (it != comps.end() && it->p == p) {
            it->multiplicity += mult;
        } else {
            comps.insert(it, {p, mult});
        }
    }
};

// Gauss quadrature of a discrete measure sum m_i delta_{v_i}: Stieltjes
// three-term recurrence followed by the symmetric tridiagonal eigenproblem
// (QL with implicit shifts).  The returned r-point rule matches the first
// 2r-1 moments of the measure with positive (non-integer) weights.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

bool tridiag_eigen(std::vector<double>& d, std::vector<double>& e,
                   std::vector<double>& first_row) {
    // d: diagonal, e: off-diagonal (e[0] unused), first_row: out, first
    // component of each eigenvector.  Classic tql2 specialization.
    const int n = static_cast<int>(d.size());
    std::vector<std::vector<double>> z(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    for (int i = 1; i < n; ++i) e[static_cast<std::size_t>(i - 1)] = e[static_cast<std::size_t>(i)];
    if (n > 0) e[static_cast<std::size_t>(n - 1)] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[static_cast<std::size_t>(m)]) +
                                  std::fabs(d[static_cast<std::size_t>(m + 1)]);
                if (std::fabs(e[static_cast<std::size_t>(m)]) <= 1e-15 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) return false;
                double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                           (2.0 * e[static_cast<std::size_t>(l)]);
                double r = std::hypot(g, 1.0);
                g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
                    e[static_cast<std::size_t>(l)] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[static_cast<std::size_t>(i)];
                    const double b = c * e[static_cast<std::size_t>(i)];
                    r = std::hypot(f, g);
                    e[static_cast<std::size_t>(i + 1)] = r;
                    if (r == 0.0) {
                        d[static_cast<std::size_t>(i + 1)] -= p;
                        e[static_cast<std::size_t>(m)] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[static_cast<std::size_t>(i + 1)] - p;
                    r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[static_cast<std::size_t>(i + 1)] = g + p;
                    g = c * r - b;
                    for (int kk = 0; kk < n; ++kk) {
                        f = z[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i + 1)];
                        z[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i + 1)] =
                            s * z[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)] + c * f;
                        z[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)] =
                            c * z[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)] - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[static_cast<std::size_t>(l)] -= p;
                e[static_cast<std::size_t>(l)] = g;
                e[static_cast<std::size_t>(m)] = 0.0;
            }
        } while (m != l);
    }
    first_row.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        first_row[static_cast<std::size_t>(i)] = z[0][static_cast<std::size_t>(i)];
    }
    return true;
}

std::optional<GaussRule> gauss_rule_discrete(const std::vector<PbdComponent>& comps, int r) {
    const std::size_t n = comps.size();
    double total = 0.0;
    for (const auto& c : comps) total += static_cast<double>(c.multiplicity);
    if (total <= 0.0) return std::nullopt;
    r = std::min<int>(r, static_cast<int>(n));
    std::vector<double> alpha, beta;  // beta[0] = total mass
    std::vector<double> p_prev(n, 0.0), p_cur(n), p_next(n);
    const double inv_sqrt_b0 = 1.0 / std::sqrt(total);
    for (std::size_t i = 0; i < n; ++i) p_cur[i] = inv_sqrt_b0;
    beta.push_back(total);
    double sqrt_beta_prev = 0.0;
    for (int j = 0; j < r; ++j) {
        long double a = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            a += static_cast<long double>(comps[i].multiplicity) * comps[i].p * p_cur[i] *
                 p_cur[i];
        }
        alpha.push_back(static_cast<double>(a));
        if (j + 1 == r) break;
        long double b = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            p_next[i] = (comps[i].p - alpha.back()) * p_cur[i] - sqrt_beta_prev * p_prev[i];
            b += static_cast<long double>(comps[i].multiplicity) * p_next[i] * p_next[i];
        }
        if (b <= 1e-28L * total) break;  // measure exhausted: fewer distinct points
        const double sb = std::sqrt(static_cast<double>(b));
        for (std::size_t i = 0; i < n; ++i) {
            p_prev[i] = p_cur[i];
            p_cur[i] = p_next[i] / sb;
        }
        beta.push_back(static_cast<double>(b));
        sqrt_beta_prev = sb;
    }
    const int k = static_cast<int>(alpha.size());
    std::vector<double> d = alpha;
    std::vector<double> e(static_cast<std::size_t>(k), 0.0);
    for (int j = 1; j < k; ++j) e[static_cast<std::size_t>(j)] = std::sqrt(beta[static_cast<std::size_t>(j)]);
    std::vector<double> first;
    if (!tridiag_eigen(d, e, first)) return std::nullopt;
    GaussRule rule;
    std::vector<std::pair<double, double>> pairs;
    for (int j = 0; j < k; ++j) {
        pairs.push_back({d[static_cast<std::size_t>(j)],
                         total * first[static_cast<std::size_t>(j)] *
                             first[static_cast<std::size_t>(j)]});
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& pr : pairs) {
        rule.nodes.push_back(pr.first);
        rule.weights.push_back(pr.second);
    }
    return rule;
}

// Largest-remainder rounding of weights to integers with a fixed total.
std::vector<long long> round_weights(const std::vector<double>& w, long long total) {
    const std::size_t k = w.size();
    std::vector<long long> out(k, 0);
    std::vector<std::pair<double, std::size_t>> rema(k);
    long long sum_floor = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double wi = std::max(0.0, w[i]);
        const double fl = std::floor(wi);
        out[i] = static_cast<long long>(fl);
        sum_floor += out[i];
        rema[i] = {wi - fl, i};
    }
    long long need = total - sum_floor;
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::size_t ri = 0;
    while (need > 0 && !rema.empty()) {
        out[rema[ri % k].second] += 1;
        ++ri;
        --need;
    }
    for (std::size_t i = k; i-- > 0 && need < 0;) {
        const std::size_t idx = rema[i].second;
        const long long take = std::min(out[idx], -need);
        out[idx] -= take;
        need += take;
    }
    return out;
}

// Damped projected Newton matching the band measure in a Chebyshev basis
// on [lo, hi]: matching T_1..T_k sums is equivalent to matching the raw
// power sums 1..k (triangular basis change) but keeps the Jacobian well
// conditioned.  Best-effort: q is left at the lowest residual reached.
void newton_band_match(std::vector<double>& q, const std::vector<long long>& w,
                       const std::vector<PbdComponent>& comps, std::size_t orders,
                       double lo, double hi) {
    const std::size_t k = q.size();
    if (k == 0 || orders == 0) return;
    const double center = 0.5 * (lo + hi);
    const double scale = 0.5 * (hi - lo);
    if (!(scale > 0.0)) return;

    const auto cheb_row = [&](double t, std::vector<double>& T) {
        T[0] = 1.0;
        if (T.size() > 1) T[1] = t;
        for (std::size_t l = 2; l < T.size(); ++l) {
            T[l] = 2.0 * t * T[l - 1] - T[l - 2];
        }
    };
    const auto cheb_deriv_row = [&](double t, std::vector<double>& D) {
        // T_l'(t) = l * U_{l-1}(t)
        std::vector<double> U(D.size());
        U[0] = 1.0;
        if (U.size() > 1) U[1] = 2.0 * t;
        for (std::size_t l = 2; l < U.size(); ++l) {
            U[l] = 2.0 * t * U[l - 1] - U[l - 2];
        }
        D[0] = 0.0;
        for (std::size_t l = 1; l < D.size(); ++l) {
            D[l] = static_cast<double>(l) * U[l - 1];
        }
    };

    std::vector<double> target(orders + 1, 0.0);
    {
        std::vector<double> T(orders + 1);
        for (const auto& comp : comps) {
            const double t = std::clamp((comp.p - center) / scale, -1.0, 1.0);
            cheb_row(t, T);
            for (std::size_t l = 1; l <= orders; ++l) {
                target[l] += static_cast<double>(comp.multiplicity) * T[l];
            }
        }
    }
    double mass = 0.0;
    for (long long wi : w) mass += static_cast<double>(wi);

    std::vector<double> f(orders), delta(orders);
    std::vector<std::vector<double>> jac(orders, std::vector<double>(k));
    std::vector<double> T(orders + 1), D(orders + 1);
    const auto fill_residual = [&](const std::vector<double>& x, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const double t = std::clamp((x[i] - center) / scale, -1.0, 1.0);
            cheb_row(t, T);
            for (std::size_t l = 1; l <= orders; ++l) {
                out[l - 1] += static_cast<double>(w[i]) * T[l];
            }
        }
        for (std::size_t l = 1; l <= orders; ++l) out[l - 1] -= target[l];
    };
    const auto norm_of = [&](const std::vector<double>& x) {
        static thread_local std::vector<double> r;
        r.assign(orders, 0.0);
        fill_residual(x, r);
        double acc = 0.0;
        for (double v : r) acc += v * v;
        return acc;
    };

    double fnorm = norm_of(q);
    const double tol = 1e-24 * std::max(1.0, mass * mass);
    for (int it = 0; it < 80 && fnorm > tol; ++it) {
        fill_residual(q, f);
        for (std::size_t i = 0; i < k; ++i) {
            const double t = std::clamp((q[i] - center) / scale, -1.0, 1.0);
            cheb_deriv_row(t, D);
            for (std::size_t l = 1; l <= orders; ++l) {
                jac[l - 1][i] = static_cast<double>(w[i]) * D[l] / scale;
            }
        }
        // Solve the (orders x k) system; square by construction here.
        auto a = jac;
        delta = f;
        const std::size_t dim = std::min(orders, k);
        bool singular = false;
        for (std::size_t col = 0; col < dim && !singular; ++col) {
            std::size_t piv = col;
            for (std::size_t row = col + 1; row < dim; ++row) {
                if (std::fabs(a[row][col]) > std::fabs(a[piv][col])) piv = row;
            }
            if (std::fabs(a[piv][col]) < 1e-300) {
                singular = true;
                break;
            }
            std::swap(a[piv], a[col]);
            std::swap(delta[piv], delta[col]);
            for (std::size_t row = col + 1; row < dim; ++row) {
                const double fac = a[row][col] / a[col][col];
                for (std::size_t cc = col; cc < k; ++cc) a[row][cc] -= fac * a[col][cc];
                delta[row] -= fac * delta[col];
            }
        }
        if (singular) return;
        for (std::size_t row = dim; row-- > 0;) {
            for (std::size_t cc = row + 1; cc < dim; ++cc) {
                delta[row] -= a[row][cc] * delta[cc];
            }
            delta[row] /= a[row][row];
        }
        double step = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 40; ++ls) {
            std::vector<double> trial(k);
            for (std::size_t i = 0; i < k; ++i) {
                const double move = i < dim ? delta[i] : 0.0;
                trial[i] = std::clamp(q[i] - step * move, lo, hi);
            }
            const double tnorm = norm_of(trial);
            if (tnorm < fnorm * (1.0 - 1e-12)) {
                q = trial;
                fnorm = tnorm;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    if (std::getenv("PBD_MATCH_DEBUG")) {
        std::fprintf(stderr, "newton: k=%zu orders=%zu final fnorm=%.3e\n", k, orders,
                     fnorm);
    }
}

// 2x2 damped Newton forcing sum w q = s1 and sum w q^2 = s2 by moving the
// pair (q_a, q_b); false if the iteration cannot stay in the box.
bool repair_first_two(std::vector<double>& q, const std::vector<long long>& w,
                      std::size_t a, std::size_t b, double lo, double hi, double s1,
                      double s2) {
    for (int it = 0; it < 60; ++it) {
        long double m1 = 0.0L, m2 = 0.0L;
        for (std::size_t i = 0; i < q.size(); ++i) {
            m1 += static_cast<long double>(w[i]) * q[i];
            m2 += static_cast<long double>(w[i]) * q[i] * q[i];
        }
        const double r1 = static_cast<double>(m1 - static_cast<long double>(s1));
        const double r2 = static_cast<double>(m2 - static_cast<long double>(s2));
        if (std::fabs(r1) < 1e-11 * std::max(1.0, std::fabs(s1)) &&
            std::fabs(r2) < 1e-11 * std::max(1.0, std::fabs(s2))) {
            return true;
        }
        const double wa = static_cast<double>(w[a]);
        const double wb = static_cast<double>(w[b]);
        const double det = wa * wb * 2.0 * (q[b] - q[a]);
        if (std::fabs(det) < 1e-14) return false;
        const double da = (r1 * 2.0 * wb * q[b] - r2 * wb) / det;
        const double db = (-r1 * 2.0 * wa * q[a] + r2 * wa) / det;
        double step = 1.0;
        bool moved = false;
        while (step > 1e-7) {
            const double na = q[a] - step * da;
            const double nb = q[b] - step * db;
            if (na >= lo && na <= hi && nb >= lo && nb <= hi) {
                q[a] = na;
                q[b] = nb;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) return false;
    }
    return false;
}

}  // namespace

std::optional<std::vector<PbdComponent>> match_band_moments(
    const std::vector<PbdComponent>& comps, double lo, double hi, int atoms,
    int match_order, double amplification, double epsilon, std::uint64_t seed,
    int multistarts) {
    if (comps.empty()) return std::vector<PbdComponent>{};
    long long mass = 0;
    for (const auto& c : comps) mass += c.multiplicity;
    const int r = static_cast<int>(std::min<long long>(atoms, mass));
    const int lstar = std::max(2, match_order);
    const double eps3 = epsilon * epsilon * epsilon;

    std::vector<double> target(static_cast<std::size_t>(lstar));
    for (int l = 1; l <= lstar; ++l) {
        long double acc = 0.0L;
        for (const auto& c : comps) {
            long double t = static_cast<long double>(c.multiplicity);
            for (int kk = 0; kk < l; ++kk) t *= c.p;
            acc += t;
        }
        target[static_cast<std::size_t>(l - 1)] = static_cast<double>(acc);
    }

    // The Gauss rule of the band measure matches 2r-1 moments with positive
    // real weights; integer rounding perturbs them slightly and the Newton
    // polish on the values absorbs the difference.
    const auto base_rule = gauss_rule_discrete(comps, r);
    if (!base_rule) return std::nullopt;

    for (int start = 0; start < multistarts; ++start) {
        Rng rng(derive_seed(seed, 0xabcd00u + static_cast<std::uint64_t>(start)));
        auto iw = round_weights(base_rule->weights, mass);
        // Later starts shuffle one unit of mass between random atom pairs to
        // escape unlucky roundings.
        for (int moves = 0; moves < start; ++moves) {
            if (iw.size() < 2) break;
            const std::size_t a = rng.next_below(iw.size());
            const std::size_t b = rng.next_below(iw.size());
            if (a != b && iw[a] > 0) {
                iw[a] -= 1;
                iw[b] += 1;
            }
        }
        std::vector<double> q;
        std::vector<long long> w;
        for (std::size_t i = 0; i < iw.size(); ++i) {
            if (iw[i] > 0) {
                q.push_back(std::clamp(base_rule->nodes[i], lo, hi));
                w.push_back(iw[i]);
            }
        }
        if (q.empty()) continue;
        const std::size_t kq = q.size();

        // Solve the square moment system in the values, weights fixed.
        {
            const std::size_t orders =
                std::min<std::size_t>(kq, static_cast<std::size_t>(lstar));
            newton_band_match(q, w, comps, orders, lo, hi);
        }

        // Exact repair of the first two power sums on the widest pair.
        if (kq >= 2) {
            std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> pairs;
            for (std::size_t a = 0; a < kq; ++a) {
                for (std::size_t b = a + 1; b < kq; ++b) {
                    pairs.push_back({-std::fabs(q[a] - q[b]), {a, b}});
                }
            }
            std::sort(pairs.begin(), pairs.end());
            bool repaired = false;
            for (const auto& pr : pairs) {
                auto qc = q;
                if (repair_first_two(qc, w, pr.second.first, pr.second.second, lo, hi,
                                     target[0], target[1])) {
                    q = qc;
                    repaired = true;
                    break;
                }
            }
            if (!repaired) continue;
        } else {
            const double want = target[0] / static_cast<double>(w[0]);
            if (want < lo || want > hi) continue;
            q[0] = want;
        }

        bool ok = true;
        double ap = 1.0;
        for (int l = 1; l <= lstar && ok; ++l) {
            ap *= amplification;
            long double acc = 0.0L;
            for (std::size_t i = 0; i < kq; ++i) {
                long double t = static_cast<long double>(w[i]);
                for (int kk = 0; kk < l; ++kk) t *= q[i];
                acc += t;
            }
            const double diff =
                std::fabs(static_cast<double>(acc) - target[static_cast<std::size_t>(l - 1)]);
            const double tol = (l <= 2) ? 1e-9 * std::max(1.0, std::fabs(target[0]))
                                        : eps3 / (2.0 * ap);
            if (diff > tol) {
                ok = false;
                if (std::getenv("PBD_MATCH_DEBUG")) {
                    std::fprintf(stderr, "match start %d: order %d diff %.3e > tol %.3e\n",
                                 start, l, diff, tol);
                }
            }
        }
        if (!ok) continue;

        std::vector<PbdComponent> out;
        for (std::size_t i = 0; i < kq; ++i) {
            out.push_back({std::clamp(q[i], lo, hi), w[i]});
        }
        return out;
    }
    return std::nullopt;
}

SparsifyResult sparsify(const PbdModel& model, double epsilon, SparsifyOptions opts) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::invalid_argument("epsilon must be in (0, 1/2)");
    }
    const double var_in = model.variance();
    if (var_in > opts.variance_cap) {
        throw std::invalid_argument("variance exceeds the sparsifier guard");
    }
    const double mean_in = model.mean();
    const IntervalScheme scheme = IntervalScheme::build(var_in, epsilon);
    const double log_inv = std::log(1.0 / epsilon);
    const double amplification =
        std::min(3.0, 10.0 * std::sqrt(log_inv / std::max(var_in, 1e-12)));

    SparsifyResult result{model, static_cast<long long>(model.distinct_count()), 0,
                          0.0, 0.0, {}};

    WorkingComponents work;
    for (const auto& c : model.components()) work.add(c.p, c.multiplicity);

    // Outer merge: reduce each outermost open interval to at most one
    // component.  Each step keeps the mean and decreases the variance.
    const double bd = scheme.level_bound(scheme.depth());
    for (int side = 0; side < 2; ++side) {
        const bool j_side = side == 1;
        while (true) {
            std::vector<std::size_t> inside;
            long long count = 0;
            for (std::size_t i = 0; i < work.comps.size(); ++i) {
                const double v = work.comps[i].p;
                const double u = j_side ? 1.0 - v : v;
                if (u > 0.0 && u < bd) {
                    inside.push_back(i);
                    count += work.comps[i].multiplicity;
                }
            }
            if (count <= 1) break;
            // take two components closest to the boundary point (0 or 1)
            const std::size_t first = j_side ? inside.back() : inside.front();
            double p1, p2;
            if (work.comps[first].multiplicity >= 2) {
                p1 = p2 = work.comps[first].p;
                work.comps[first].multiplicity -= 2;
            } else {
                p1 = work.comps[first].p;
                work.comps[first].multiplicity -= 1;
                const std::size_t second =
                    j_side ? inside[inside.size() - 2] : inside[1];
                p2 = work.comps[second].p;
                work.comps[second].multiplicity -= 1;
            }
            std::erase_if(work.comps,
                          [](const PbdComponent& c) { return c.multiplicity <= 0; });
            if (!j_side) {
                work.add(0.0, 1);
                work.add(std::min(1.0, p1 + p2), 1);
            } else {
                work.add(1.0, 1);
                work.add(std::max(0.0, p1 + p2 - 1.0), 1);
            }
        }
    }

    // Per-band re-solve, level by level.
    for (int level = 0; level <= scheme.depth(); ++level) {
        for (int side = 0; side < 2; ++side) {
            const Band band{BandKind::Interval, side == 1, level};
            const auto box = scheme.band_box(band);
            std::vector<PbdComponent> in_band;
            for (const auto& c : work.comps) {
                if (scheme.classify(c.p) == band) in_band.push_back(c);
            }
            const long long dcap = scheme.distinct_cap(level);
            if (static_cast<long long>(in_band.size()) <= dcap) continue;

            // J side is matched in mirrored coordinates u = 1 - v; the
            // matched sums are then exactly the high-side power sums.
            std::vector<PbdComponent> mirrored;
            double mlo = box.first, mhi = box.second;
            if (band.j_side) {
                for (const auto& c : in_band) mirrored.push_back({1.0 - c.p, c.multiplicity});
                mlo = 1.0 - box.second;
                mhi = 1.0 - box.first;
            } else {
                mirrored = in_band;
            }
            auto matched = match_band_moments(
                mirrored, mlo, mhi, static_cast<int>(dcap), static_cast<int>(dcap),
                amplification, epsilon,
                derive_seed(opts.seed, 0x5fa500u + static_cast<std::uint64_t>(level * 2 + side)),
                opts.multistarts);
            if (!matched) {
                result.fallback_bands.push_back(band.name());
                continue;
            }
            for (const auto& c : in_band) {
                for (auto& wcomp : work.comps) {
                    if (wcomp.p == c.p) wcomp.multiplicity -= c.multiplicity;
                }
            }
            std::erase_if(work.comps,
                          [](const PbdComponent& c) { return c.multiplicity <= 0; });
            for (const auto& c : *matched) {
                const double v = band.j_side ? 1.0 - c.p : c.p;
                work.add(std::clamp(v, 0.0, 1.0), c.multiplicity);
            }
        }
    }

    result.model = PbdModel::from_components(work.comps);
    result.distinct_after = static_cast<long long>(result.model.distinct_count());
    result.mean_delta = result.model.mean() - mean_in;
    result.var_delta = result.model.variance() - var_in;
    return result;
}

}  // namespace pbd
