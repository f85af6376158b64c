#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "pbd/model.hpp"
#include "pbd/polysys.hpp"

namespace pbd {

struct LearnConfig {
    double epsilon = 0.1;
    double constant_c = 10.0;
    long long sample_budget = 0;          // 0: ceil(C^3 eps^-2 ln^2(1/eps))
    std::uint64_t seed = 1;
    int solver_multistarts = 32;
    int solver_max_iters = 80;
    double large_variance_threshold = 0;  // 0: 1/eps^3 (threshold on sigma_tilde)
    long long max_systems = 1000000;      // candidates handed to the solver
    long long enumeration_step_cap = 400000000;
    int threads = 1;

    long long default_sample_budget() const;
    double effective_threshold() const;
    void validate() const;
};

struct LearnReport {
    PbdModel output;
    std::string regime;        // "shifted-binomial" | "system"
    long long systems_tried = 0;   // candidates evaluated (post-prune)
    long long systems_solved = 0;  // full multistart solves
    double mu_tilde = 0.0;
    double sigma_tilde = 0.0;
    long long modulus = 0;
    long long halfwidth = 0;
    double wall_time_sec = 0.0;
    long long feasible_index = -1;  // stream index of the accepted candidate
};

// Raised when no feasible system is found within the budget; carries the
// diagnostics the report would have had.
class LearnExhausted : public std::runtime_error {
public:
    LearnExhausted(std::string msg, long long tried, long long solved, double mu,
                   double sigma, long long modulus, long long halfwidth)
        : std::runtime_error(std::move(msg)),
          systems_tried(tried),
          systems_solved(solved),
          mu_tilde(mu),
          sigma_tilde(sigma),
          modulus(modulus),
          halfwidth(halfwidth) {}

    long long systems_tried;
    long long systems_solved;
    double mu_tilde;
    double sigma_tilde;
    long long modulus;
    long long halfwidth;
};

// mu = sample mean, sigma = sqrt(population variance + 1), computed on the
// first min(1000, N) samples.
std::pair<double, double> estimate_mean_var(const SampleSet& samples);

// Sketch parameters from step 1: M = ceil(C (ln(1/eps) + sigma sqrt(ln(1/eps)))),
// L = ceil(C^2 ln(1/eps)).
std::pair<long long, long long> sketch_params(double epsilon, double sigma_tilde,
                                              double constant_c);

// Method-of-moments shifted binomial fit: t ones plus one Binomial(m, p)
// block (plus padding zeros), mean and variance matched to the samples.
PbdModel learn_shifted_binomial(const SampleSet& samples, double epsilon, long long n);

LearnReport proper_learn(const SampleSet& samples, long long n, const LearnConfig& config);

}  // namespace pbd
