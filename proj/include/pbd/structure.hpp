#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pbd/model.hpp"

namespace pbd {

// Frozen constants for the O(.) bounds of the structural results.  The source
// gives only asymptotics; these are pinned here and asserted in tests so that
// regressions are visible.
inline constexpr double kDistinctCapC1 = 4.0;    // distinct parameters per band
inline constexpr double kTotalTriplesC2 = 64.0;  // interval triples per multiset
inline constexpr double kSparsifyCapC3 = 40.0;   // sparsifier output distinct cap
inline constexpr double kCountCapFactor = 4.0;   // band count cap = 4 Var / B_i

enum class BandKind { Zero, One, Interval };

// One band of the doubly-geometric partition.  Interval bands carry a side
// (I = low half, J = high half) and a level in 0..depth+1, where depth+1 is
// the outermost open interval next to 0 or 1.
struct Band {
    BandKind kind = BandKind::Interval;
    bool j_side = false;
    int level = 0;

    bool operator==(const Band& other) const = default;
    std::string name() const;
};

// The B_i / I_i / J_i geometric interval partition of [0,1].
class IntervalScheme {
public:
    // rate = min(1/4, sqrt(ln(1/eps)/variance)); variance 0 is treated as 1.
    static IntervalScheme build(double variance_estimate, double epsilon);

    double rate() const { return rate_; }
    int depth() const { return depth_; }
    double epsilon() const { return epsilon_; }
    double variance_estimate() const { return variance_; }
    double level_bound(int i) const { return levels_.at(static_cast<std::size_t>(i)); }

    // Caps for levels 0..depth; the outer level depth+1 admits one singleton.
    long long distinct_cap(int level) const;
    long long count_cap(int level) const;

    Band classify(double value) const;
    // Closed hull [lo, hi] of a band's interval.
    std::pair<double, double> band_box(const Band& band) const;

private:
    double rate_ = 0.25;
    double epsilon_ = 0.1;
    double variance_ = 1.0;
    int depth_ = 0;
    std::vector<double> levels_;        // B_0 .. B_depth
    std::vector<long long> dcaps_;      // per level 0..depth
    std::vector<long long> ccaps_;      // per level 0..depth
};

struct IntervalTriple {
    Band band;
    double lo = 0.0;
    double hi = 0.0;
    long long mult = 0;
};

// A candidate multiset of triples (m_i, a_i, b_i): `ones`/`zeros` encode the
// [1,1] and [0,0] triples, interval triples carry the free parameters.
struct MultiplicityMultiset {
    long long ones = 0;
    long long zeros = 0;
    std::vector<IntervalTriple> triples;

    long long total_multiplicity() const;
    long long interval_mass() const;
};

// Window half-width for the ones count: min(n, ceil(1/eps^3)).
long long ones_window(long long n, double epsilon);

// Admissibility predicate: exactly the set of multisets the enumerator
// yields (tested for equivalence on exhaustively enumerable configurations).
bool admits(const IntervalScheme& scheme, const MultiplicityMultiset& ms, long long n,
            double mu_tilde);

// Optional interval-arithmetic windows used by the learner to skip candidates
// whose mean/variance ranges cannot reach the estimates.  Skipping never
// reorders the stream: the filtered stream is a subsequence of the pure one.
struct EnumerationWindows {
    double mean_lo = -1e300;
    double mean_hi = 1e300;
    double var_lo = -1e300;
    double var_hi = 1e300;
};

// Lazily yields every admissible multiset.  Order: ascending number of
// interval triples, then ones count spiraling out from floor(mu_tilde), then
// band slots in level order, then per-band multiplicity multisets in
// lexicographic order of their non-increasing encoding.
class MultisetEnumerator {
public:
    MultisetEnumerator(const IntervalScheme& scheme, long long n, double mu_tilde,
                       std::optional<EnumerationWindows> windows = std::nullopt);

    std::optional<MultiplicityMultiset> next();

    // Guard against unbounded walks through pruned regions; 0 disables.
    void set_step_cap(long long cap) { step_cap_ = cap; }
    long long steps() const { return steps_; }
    bool hit_step_cap() const { return hit_step_cap_; }

private:
    struct Slot {
        Band band;
        double lo, hi;       // value box
        double vmin, vmax;   // range of q(1-q) over the box
        long long dcap;      // max number of triples
        long long ccap;      // max total multiplicity
    };

    bool advance_masses();
    bool first_masses();
    bool advance_combo();
    bool first_combo();
    bool advance_ones();
    bool mass_state_ok(std::size_t upto) const;
    bool leaf_ok() const;
    MultiplicityMultiset make_current() const;

    const IntervalScheme& scheme_;
    long long n_;
    double mu_tilde_;
    std::optional<EnumerationWindows> windows_;

    std::vector<Slot> slots_;
    long long ones_center_ = 0;
    long long ones_halfwidth_ = 0;

    int k_ = -1;               // current interval triple count
    long long k_max_ = 0;
    int ones_step_ = 0;        // spiral position
    long long ones_ = 0;
    std::vector<long long> combo_;   // triples per slot, sums to k_
    std::vector<std::vector<long long>> masses_;  // per slot, non-increasing
    bool exhausted_ = false;
    bool combo_active_ = false;
    mutable long long steps_ = 0;
    long long step_cap_ = 0;
    bool hit_step_cap_ = false;
};

// log10 of the exact stream size (pure mode) via partition-count DP.
double count_multisets_log10(const IntervalScheme& scheme, long long n, double mu_tilde);

struct SparsifyOptions {
    double variance_cap = 1e9;
    int multistarts = 16;
    std::uint64_t seed = 1;
};

struct SparsifyResult {
    PbdModel model;
    long long distinct_before = 0;
    long long distinct_after = 0;
    double mean_delta = 0.0;
    double var_delta = 0.0;
    std::vector<std::string> fallback_bands;  // bands where the matcher fell back
    bool any_fallback() const { return !fallback_bands.empty(); }
};

// Rewrite a PBD into an epsilon-close PBD with O(log 1/eps) distinct
// parameters: outer merge next to 0 and 1, then per-band moment matching
// with the first two moments held exactly.
SparsifyResult sparsify(const PbdModel& model, double epsilon, SparsifyOptions opts = {});

// Classify a model's components against a scheme.  Throws if any component
// multiplicity pattern cannot be expressed (never happens for sparsify
// output with the same scheme).
MultiplicityMultiset classify_model(const IntervalScheme& scheme, const PbdModel& model);

// Per-band moment matcher, exposed for tests and for constructing
// moment-matched pairs.  Returns atoms (value, weight) with integer weights
// summing to the input mass, first two power sums matched to ~1e-10 and
// orders 3..match_order within eps^3 / (2 A^l), or nullopt on failure.
std::optional<std::vector<PbdComponent>> match_band_moments(
    const std::vector<PbdComponent>& comps, double lo, double hi, int atoms,
    int match_order, double amplification, double epsilon, std::uint64_t seed,
    int multistarts);

}  // namespace pbd
