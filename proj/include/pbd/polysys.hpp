#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbd/fourier.hpp"
#include "pbd/structure.hpp"

namespace pbd {

enum class Regime { Large, Small };

// Regime threshold on sigma_tilde^2: Small iff sigma^2 < 100 ln(1/eps).
inline constexpr double kSmallRegimeFactor = 100.0;

Regime select_regime(double sigma_tilde, double epsilon);

struct SystemTriple {
    double lo = 0.0;
    double hi = 0.0;
    long long mult = 0;
};

// The polynomial constraint system for one multiplicity multiset: boxed
// variables q_i, mean/variance window constraints, and the truncated-series
// Fourier matching constraint against the target sketch.
struct PolySystem {
    Regime regime = Regime::Small;
    double mu_tilde = 0.0;
    double sigma_tilde = 1.0;
    double epsilon = 0.1;
    long long modulus = 2;
    long long halfwidth = 0;
    int lmax = 1;
    long long n = 0;
    long long ones = 0;
    long long zeros = 0;
    long long phase_mult = 0;  // total multiplicity of parameters above 1/2
    std::vector<SystemTriple> triples;   // one variable per triple
    std::vector<int> low_set;            // indices with box in [0, 1/4] or [0, 1/2]
    std::vector<int> high_set;           // indices with box in [3/4, 1] or (1/2, 1]
    std::vector<int> mid_set;            // small regime only
    FourierSketch target;

    std::size_t variable_count() const { return triples.size(); }
    double ft_budget() const { return epsilon * epsilon / 8.0; }
};

struct SystemResidual {
    double mean_slack = 0.0;  // >= 0 iff the mean constraint is satisfied
    double var_slack = 0.0;
    std::vector<double> box_violations;
    double ft_residual = 0.0;
    double ft_budget = 0.0;

    bool feasible() const;
};

// Builds the system for a candidate multiset.  Throws if a triple's box
// straddles 1/2 (multiset produced against a mismatched scheme/regime).
PolySystem build_system(const MultiplicityMultiset& ms, const FourierSketch& target,
                        double mu_tilde, double sigma_tilde, long long modulus,
                        long long halfwidth, int lmax, double epsilon, Regime regime);

// Truncated exponential exp'(z) = sum_{k=0}^{lmax} z^k / k!.
std::complex<double> exp_truncated(std::complex<double> z, int lmax);

// The system's Fourier-side value q_xi at an assignment.  exp' is applied
// only inside its accuracy radius min(lmax/3, 38), where both the Taylor
// tail and the floating-point cancellation noise stay below eps^3; beyond
// it the coefficient of any mean/variance-feasible PBD is itself below
// eps^3 and q_xi is taken as 0.
std::complex<double> system_dft(const PolySystem& sys, std::span<const double> assignment,
                                long long xi);

// The exp' argument (g_xi with the linear phase reduced, plus the 2 pi i
// o_xi shift in the large regime), exposed for the magnitude-envelope tests.
std::complex<double> system_log_argument(const PolySystem& sys,
                                         std::span<const double> assignment, long long xi);

double exp_accuracy_radius(int lmax);

SystemResidual residual(const PolySystem& sys, std::span<const double> assignment);

// Interval-arithmetic necessary condition on the mean/variance windows.
bool prefilter_feasible(const PolySystem& sys);

struct SolveOptions {
    int multistarts = 32;
    int max_iters = 80;
    bool early_abort = true;  // give up on starts that stall far from feasibility
};

// Multistart box-constrained minimization of the constraint penalty followed
// by exact residual verification; never returns an infeasible assignment.
// `precision` is the coordinate resolution target (the algorithm's eps/(2k)).
std::optional<std::vector<double>> solve(const PolySystem& sys, double precision,
                                         const SolveOptions& opts = {});

}  // namespace pbd
