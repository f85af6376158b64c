#pragma once

#include <cstdint>

#include "pbd/model.hpp"

namespace pbd {

// Exact total variation between two models through the extended-precision
// PMF fold.  Desk-scale: throws when max(n) exceeds 20000.
double tv_exact(const PbdModel& a, const PbdModel& b);

struct ChebyshevPair {
    PbdModel p;
    PbdModel q;
    double min_param_gap = 0.0;  // distance from p_{round(n/4)} to the q grid
};

// The parameter-estimation lower-bound construction: p_j = (1+cos(2pi j/n))/8
// and q_j = (1+cos((2pi j+pi)/n))/8, j = 1..n.  The two models share power
// sums up to order n-1 yet keep parameters ~1/n apart.
ChebyshevPair chebyshev_pair(long long n);

// Exhaustive grid-search learner for tiny instances (n <= 4): minimizes TV
// between the candidate pmf and the empirical pmf, lexicographic tie-break.
PbdModel brute_force_learn(const SampleSet& samples, long long n, double grid_step);

struct WindowedTv {
    double tv_window = 0.0;
    double tail_bound = 0.0;
    double upper() const { return tv_window + tail_bound; }
};

// TV between two shifted-binomial-shaped models (zeros + at most one interior
// block + ones) evaluated on a +-12 sigma window; the mass outside the window
// is bounded with Bernstein's inequality and reported separately.  Works at
// any n.
WindowedTv tv_shifted_binomial_window(const PbdModel& a, const PbdModel& b);

}  // namespace pbd
