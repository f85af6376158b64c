#include "pbd/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pbd/rng.hpp"

namespace pbd {

namespace {

void check_value(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("PBD parameter outside [0,1]: " + std::to_string(p));
    }
}

// Stable log of Binomial(m, p) pmf at k, for the windowed sampler.
double log_binom_pmf(long long m, double p, long long k) {
    if (k < 0 || k > m) return -INFINITY;
    if (p <= 0.0) return k == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return k == m ? 0.0 : -INFINITY;
    double lg = std::lgamma(static_cast<double>(m) + 1.0) -
                std::lgamma(static_cast<double>(k) + 1.0) -
                std::lgamma(static_cast<double>(m - k) + 1.0);
    return lg + static_cast<double>(k) * std::log(p) +
           static_cast<double>(m - k) * std::log1p(-p);
}

// Inverse-CDF table for Binomial(m, p) restricted to a +-12 sigma window
// around the mean; the truncated tail mass is < 1e-14.  Built once per
// distinct component, then each draw is a binary search.
struct WindowedBinomial {
    long long lo = 0;
    std::vector<double> cdf;

    WindowedBinomial(long long m, double p) {
        if (m == 0 || p <= 0.0) {
            lo = 0;
            cdf = {1.0};
            return;
        }
        if (p >= 1.0) {
            lo = m;
            cdf = {1.0};
            return;
        }
        const double mu = static_cast<double>(m) * p;
        const double sigma = std::sqrt(mu * (1.0 - p));
        lo = std::max<long long>(0,
                                 static_cast<long long>(std::floor(mu - 12.0 * sigma - 2.0)));
        const long long hi = std::min<long long>(
            m, static_cast<long long>(std::ceil(mu + 12.0 * sigma + 2.0)));
        cdf.resize(static_cast<std::size_t>(hi - lo + 1));
        long double acc = 0.0L;
        for (long long k = lo; k <= hi; ++k) {
            acc += std::exp(log_binom_pmf(m, p, k));
            cdf[static_cast<std::size_t>(k - lo)] = static_cast<double>(acc);
        }
        const double total = cdf.back();
        for (double& v : cdf) v /= total;
        cdf.back() = 1.0;
    }

    long long draw(Rng& rng) const {
        const double u = rng.next_double();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return lo + static_cast<long long>(it == cdf.end() ? cdf.size() - 1
                                                           : it - cdf.begin());
    }
};

}  // namespace

PbdModel PbdModel::from_params(std::span<const double> params) {
    if (params.empty()) throw std::invalid_argument("PBD needs at least one parameter");
    std::vector<PbdComponent> comps;
    comps.reserve(params.size());
    for (double p : params) {
        check_value(p);
        comps.push_back({p, 1});
    }
    return from_components(std::move(comps));
}

PbdModel PbdModel::from_components(std::vector<PbdComponent> comps) {
    if (comps.empty()) throw std::invalid_argument("PBD needs at least one component");
    for (const auto& c : comps) {
        check_value(c.p);
        if (c.multiplicity < 1) throw std::invalid_argument("multiplicity must be positive");
    }
    std::sort(comps.begin(), comps.end(),
              [](const PbdComponent& a, const PbdComponent& b) { return a.p < b.p; });
    std::vector<PbdComponent> merged;
    merged.reserve(comps.size());
    for (const auto& c : comps) {
        if (!merged.empty() && merged.back().p == c.p) {
            merged.back().multiplicity += c.multiplicity;
        } else {
            merged.push_back(c);
        }
    }
    PbdModel m;
    m.comps_ = std::move(merged);
    m.n_ = 0;
    for (const auto& c : m.comps_) m.n_ += c.multiplicity;
    return m;
}

double PbdModel::mean() const {
    long double s = 0.0L;
    for (const auto& c : comps_) s += static_cast<long double>(c.multiplicity) * c.p;
    return static_cast<double>(s);
}

double PbdModel::variance() const {
    long double s = 0.0L;
    for (const auto& c : comps_) {
        s += static_cast<long double>(c.multiplicity) * c.p * (1.0L - static_cast<long double>(c.p));
    }
    return static_cast<double>(s);
}

std::vector<double> PbdModel::expand() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_));
    for (const auto& c : comps_) {
        for (long long i = 0; i < c.multiplicity; ++i) out.push_back(c.p);
    }
    return out;
}

double Pmf::mass() const {
    long double s = 0.0L;
    for (double v : probs) s += v;
    return static_cast<double>(s);
}

void Pmf::validate() const {
    if (probs.empty()) throw std::invalid_argument("empty pmf");
    for (double v : probs) {
        if (!(v >= -1e-12) || !std::isfinite(v)) throw std::invalid_argument("negative pmf entry");
    }
    if (std::fabs(mass() - 1.0) > 1e-9) throw std::invalid_argument("pmf mass not 1");
}

void SampleSet::validate() const {
    if (values.empty()) throw std::invalid_argument("empty sample set");
    for (long long v : values) {
        if (v < 0) throw std::invalid_argument("negative sample value");
        if (n_hint && v > *n_hint) throw std::invalid_argument("sample exceeds n hint");
    }
}

std::vector<long double> pmf_exact_ext(const PbdModel& model) {
    std::vector<long double> pmf;
    pmf.reserve(static_cast<std::size_t>(model.n()) + 1);
    pmf.push_back(1.0L);
    for (const auto& c : model.components()) {
        const long double q = c.p;
        for (long long rep = 0; rep < c.multiplicity; ++rep) {
            pmf.push_back(0.0L);
            for (std::size_t j = pmf.size() - 1; j > 0; --j) {
                pmf[j] = pmf[j] * (1.0L - q) + pmf[j - 1] * q;
            }
            pmf[0] *= (1.0L - q);
        }
    }
    return pmf;
}

Pmf pmf_exact(const PbdModel& model) {
    std::vector<long double> ext = pmf_exact_ext(model);
    Pmf out;
    out.offset = 0;
    out.probs.resize(ext.size());
    for (std::size_t i = 0; i < ext.size(); ++i) {
        out.probs[i] = std::max(0.0, static_cast<double>(ext[i]));
    }
    return out;
}

SampleSet sample(const PbdModel& model, long long count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample count must be >= 1");
    SampleSet out;
    out.values.reserve(static_cast<std::size_t>(count));
    out.n_hint = model.n();
    Rng rng(derive_seed(seed, 0x5a6d70u));

    if (model.n() <= 10000) {
        const Pmf pmf = pmf_exact(model);
        std::vector<double> cdf(pmf.probs.size());
        long double acc = 0.0L;
        for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
            acc += pmf.probs[i];
            cdf[i] = static_cast<double>(acc);
        }
        cdf.back() = 1.0;
        for (long long i = 0; i < count; ++i) {
            const double u = rng.next_double();
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            out.values.push_back(static_cast<long long>(it - cdf.begin()));
        }
    } else {
        std::vector<WindowedBinomial> blocks;
        blocks.reserve(model.components().size());
        for (const auto& c : model.components()) {
            blocks.emplace_back(c.multiplicity, c.p);
        }
        for (long long i = 0; i < count; ++i) {
            long long total = 0;
            for (const auto& b : blocks) total += b.draw(rng);
            out.values.push_back(total);
        }
    }
    return out;
}

double tv_distance(const Pmf& a, const Pmf& b) {
    const long long lo = std::min(a.offset, b.offset);
    const long long hi = std::max(a.offset + static_cast<long long>(a.probs.size()),
                                  b.offset + static_cast<long long>(b.probs.size()));
    long double acc = 0.0L;
    for (long long j = lo; j < hi; ++j) {
        const long long ia = j - a.offset;
        const long long ib = j - b.offset;
        const double pa = (ia >= 0 && ia < static_cast<long long>(a.probs.size()))
                              ? a.probs[static_cast<std::size_t>(ia)] : 0.0;
        const double pb = (ib >= 0 && ib < static_cast<long long>(b.probs.size()))
                              ? b.probs[static_cast<std::size_t>(ib)] : 0.0;
        acc += std::fabs(static_cast<long double>(pa) - pb);
    }
    return static_cast<double>(acc / 2.0L);
}

Pmf empirical_pmf(const SampleSet& samples) {
    samples.validate();
    long long maxv = 0;
    for (long long v : samples.values) maxv = std::max(maxv, v);
    Pmf out;
    out.offset = 0;
    out.probs.assign(static_cast<std::size_t>(maxv) + 1, 0.0);
    const double w = 1.0 / static_cast<double>(samples.values.size());
    for (long long v : samples.values) out.probs[static_cast<std::size_t>(v)] += w;
    return out;
}

}  // namespace pbd
