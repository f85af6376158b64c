#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pbd {

// One distinct Bernoulli parameter together with how many components share it.
struct PbdComponent {
    double p = 0.0;
    long long multiplicity = 0;

    bool operator==(const PbdComponent& other) const = default;
};

// A Poisson binomial distribution of order n, stored as its sorted distinct
// parameters with integer multiplicities.  Immutable after construction;
// construction validates every invariant (values in [0,1], strictly
// increasing, multiplicities >= 1 summing to n).
class PbdModel {
public:
    // Merge-sort a raw length-n parameter list into distinct components.
    // Values that are bitwise equal merge; near-duplicates stay distinct.
    static PbdModel from_params(std::span<const double> params);

    // Build from (value, multiplicity) pairs; pairs may be unsorted and may
    // repeat values (they are merged), multiplicities must be positive.
    static PbdModel from_components(std::vector<PbdComponent> comps);

    long long n() const { return n_; }
    const std::vector<PbdComponent>& components() const { return comps_; }
    std::size_t distinct_count() const { return comps_.size(); }

    double mean() const;
    double variance() const;

    // Expand back to the sorted length-n parameter vector.
    std::vector<double> expand() const;

    bool operator==(const PbdModel& other) const = default;

private:
    PbdModel() = default;
    long long n_ = 0;
    std::vector<PbdComponent> comps_;
};

// Dense probability mass function on [offset, offset + probs.size() - 1].
struct Pmf {
    long long offset = 0;
    std::vector<double> probs;

    double mass() const;
    // Throws if entries are materially negative or mass is off by > 1e-9.
    void validate() const;
};

struct SampleSet {
    std::vector<long long> values;
    std::optional<long long> n_hint;

    void validate() const;
};

// Exact PMF over [0..n] by folding one Bernoulli at a time with the two-term
// recurrence, accumulated in extended precision.
Pmf pmf_exact(const PbdModel& model);

// Extended-precision variant used by oracles that need sub-double resolution
// (e.g. total variation between nearly identical models).
std::vector<long double> pmf_exact_ext(const PbdModel& model);

// i.i.d. samples, deterministic given seed.  Uses inverse-CDF over pmf_exact
// when n <= 10^4; for larger n each distinct block is drawn by inverse-CDF
// over a windowed binomial pmf (window +-12 sigma, truncated mass < 1e-14).
SampleSet sample(const PbdModel& model, long long count, std::uint64_t seed);

// (1/2) * L1 distance; supports aligned via offsets, missing entries are 0.
double tv_distance(const Pmf& a, const Pmf& b);

// Empirical pmf of a sample set on [0, max value].
Pmf empirical_pmf(const SampleSet& samples);

}  // namespace pbd
