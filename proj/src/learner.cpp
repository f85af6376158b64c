#include "pbd/learner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace pbd {

long long LearnConfig::default_sample_budget() const {
    const double li = std::log(1.0 / epsilon);
    return static_cast<long long>(
        std::ceil(constant_c * constant_c * constant_c / (epsilon * epsilon) * li * li));
}

double LearnConfig::effective_threshold() const {
    if (large_variance_threshold > 0) return large_variance_threshold;
    return 1.0 / (epsilon * epsilon * epsilon);
}

void LearnConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::invalid_argument("epsilon must be in (0, 1/2)");
    }
    if (constant_c < 1.0) throw std::invalid_argument("constant C must be >= 1");
    if (max_systems < 1) throw std::invalid_argument("max_systems must be positive");
    if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

std::pair<double, double> estimate_mean_var(const SampleSet& samples) {
    samples.validate();
    const std::size_t take = std::min<std::size_t>(1000, samples.values.size());
    long double s1 = 0.0L, s2 = 0.0L;
    for (std::size_t i = 0; i < take; ++i) {
        const long double v = static_cast<long double>(samples.values[i]);
        s1 += v;
        s2 += v * v;
    }
    const long double mean = s1 / static_cast<long double>(take);
    long double var = s2 / static_cast<long double>(take) - mean * mean;
    if (var < 0.0L) var = 0.0L;
    return {static_cast<double>(mean), std::sqrt(static_cast<double>(var) + 1.0)};
}

std::pair<long long, long long> sketch_params(double epsilon, double sigma_tilde,
                                              double constant_c) {
    const double li = std::log(1.0 / epsilon);
    const long long m = static_cast<long long>(
        std::ceil(constant_c * (li + sigma_tilde * std::sqrt(li))));
    const long long l = static_cast<long long>(std::ceil(constant_c * constant_c * li));
    return {std::max<long long>(m, 2), l};
}

namespace {

struct MomentPair {
    double mean = 0.0;
    double var = 0.0;
};

MomentPair sample_moments(const SampleSet& samples, std::size_t take) {
    take = std::min(take, samples.values.size());
    long double s1 = 0.0L, s2 = 0.0L;
    for (std::size_t i = 0; i < take; ++i) {
        const long double v = static_cast<long double>(samples.values[i]);
        s1 += v;
        s2 += v * v;
    }
    const long double mean = s1 / static_cast<long double>(take);
    long double var = s2 / static_cast<long double>(take) - mean * mean;
    if (var < 0.0L) var = 0.0L;
    return {static_cast<double>(mean), static_cast<double>(var)};
}

PbdModel assemble_shifted(long long n, long long t, long long m, double p) {
    std::vector<PbdComponent> comps;
    const long long zeros = n - t - m;
    if (zeros > 0) comps.push_back({0.0, zeros});
    if (m > 0) comps.push_back({p, m});
    if (t > 0) comps.push_back({1.0, t});
    if (comps.empty()) comps.push_back({0.0, n});
    return PbdModel::from_components(std::move(comps));
}

}  // namespace

PbdModel learn_shifted_binomial(const SampleSet& samples, double epsilon, long long n) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::invalid_argument("epsilon must be in (0, 1/2)");
    }
    const std::size_t draw =
        static_cast<std::size_t>(std::ceil(100.0 / (epsilon * epsilon)));
    const MomentPair mp = sample_moments(samples, draw);
    const double mu = std::min(mp.mean, static_cast<double>(n));
    const double var = mp.var;

    if (var < 1e-9) {
        // Degenerate: point mass at the rounded mean.
        const long long t = std::clamp<long long>(std::llround(mu), 0, n);
        return assemble_shifted(n, t, 0, 0.5);
    }
    if (mu - var <= 1e-9) {
        // Over-dispersed relative to any binomial with this mean: the closest
        // clipped fit is the flattest one, m = n and p matching the mean.
        const double p = std::clamp(mu / static_cast<double>(n), 0.0, 1.0);
        return assemble_shifted(n, 0, n, p);
    }

    // Exact moment fit with shift t: p = 1 - var/(mu - t), m = (mu-t)/p.
    // m(t) + t is increasing in t, so t = 0 gives the smallest footprint; it
    // fits unless m(0) > n, in which case no exact fit exists and the best
    // clipped fit uses every component.
    const double m0 = mu * mu / (mu - var);
    if (m0 <= static_cast<double>(n)) {
        long long m = std::clamp<long long>(std::llround(m0), 1, n);
        const double p = std::clamp(mu / static_cast<double>(m), 0.0, 1.0);
        return assemble_shifted(n, 0, m, p);
    }
    // Clipped fit: scan the shift, p matches the mean exactly, pick the
    // variance-closest candidate.
    long long best_t = 0;
    double best_err = 1e300;
    const long long t_hi = std::clamp<long long>(static_cast<long long>(mu), 0, n - 1);
    const int grid = 256;
    for (int g = 0; g <= grid; ++g) {
        const long long t = t_hi * g / grid;
        const long long m = n - t;
        if (m < 1) continue;
        const double p = std::clamp((mu - static_cast<double>(t)) / static_cast<double>(m),
                                    0.0, 1.0);
        const double v = static_cast<double>(m) * p * (1.0 - p);
        const double err = std::fabs(v - var);
        if (err < best_err) {
            best_err = err;
            best_t = t;
        }
    }
    // Local refinement around the best grid point.
    for (long long t = std::max<long long>(0, best_t - 64);
         t <= std::min<long long>(n - 1, best_t + 64); ++t) {
        const long long m = n - t;
        const double p = std::clamp((mu - static_cast<double>(t)) / static_cast<double>(m),
                                    0.0, 1.0);
        const double v = static_cast<double>(m) * p * (1.0 - p);
        const double err = std::fabs(v - var);
        if (err < best_err) {
            best_err = err;
            best_t = t;
        }
    }
    const long long m = n - best_t;
    const double p = std::clamp(
        (mu - static_cast<double>(best_t)) / static_cast<double>(m), 0.0, 1.0);
    return assemble_shifted(n, best_t, m, p);
}

namespace {

PbdModel expand_solution(const MultiplicityMultiset& ms, const PolySystem& sys,
                         const std::vector<double>& assignment) {
    std::vector<PbdComponent> comps;
    if (ms.zeros > 0) comps.push_back({0.0, ms.zeros});
    if (ms.ones > 0) comps.push_back({1.0, ms.ones});
    for (std::size_t i = 0; i < sys.triples.size(); ++i) {
        const double q = std::clamp(assignment[i], sys.triples[i].lo, sys.triples[i].hi);
        comps.push_back({std::clamp(q, 0.0, 1.0), sys.triples[i].mult});
    }
    return PbdModel::from_components(std::move(comps));
}

}  // namespace

LearnReport proper_learn(const SampleSet& samples, long long n, const LearnConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    samples.validate();
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    const long long budget =
        config.sample_budget > 0 ? config.sample_budget : config.default_sample_budget();
    if (static_cast<long long>(samples.values.size()) < budget) {
        throw std::invalid_argument("not enough samples for the configured budget");
    }

    const auto [mu_tilde, sigma_tilde] = estimate_mean_var(samples);
    const auto [modulus, halfwidth] =
        sketch_params(config.epsilon, sigma_tilde, config.constant_c);
    const int lmax = static_cast<int>(halfwidth);

    const auto finish = [&](LearnReport rep) {
        const auto t1 = std::chrono::steady_clock::now();
        rep.wall_time_sec = std::chrono::duration<double>(t1 - t0).count();
        return rep;
    };

    if (sigma_tilde > config.effective_threshold()) {
        LearnReport rep{learn_shifted_binomial(samples, config.epsilon, n),
                        "shifted-binomial", 0, 0, mu_tilde, sigma_tilde,
                        modulus, halfwidth, 0.0, -1};
        return finish(rep);
    }

    const FourierSketch target = empirical_dft(samples, modulus, halfwidth);
    const IntervalScheme scheme =
        IntervalScheme::build(sigma_tilde * sigma_tilde, config.epsilon);
    const Regime regime = select_regime(sigma_tilde, config.epsilon);

    EnumerationWindows windows;
    windows.mean_lo = mu_tilde - 2.0 * sigma_tilde;
    windows.mean_hi = mu_tilde + 2.0 * sigma_tilde;
    windows.var_lo = sigma_tilde * sigma_tilde / 2.0 - 1.0;
    windows.var_hi = 2.0 * sigma_tilde * sigma_tilde;
    MultisetEnumerator stream(scheme, n, mu_tilde, windows);
    stream.set_step_cap(config.enumeration_step_cap);

    SolveOptions sopts;
    sopts.multistarts = config.solver_multistarts;
    sopts.max_iters = config.solver_max_iters;

    struct Candidate {
        long long index;
        MultiplicityMultiset ms;
    };
    struct Hit {
        long long index;
        MultiplicityMultiset ms;
        PolySystem sys;
        std::vector<double> assignment;
    };

    long long tried = 0;
    long long solved = 0;
    std::optional<Hit> best;

    const int threads = std::max(1, config.threads);
    const long long batch_size = threads == 1 ? 1 : 8LL * threads;

    const auto solve_candidate = [&](const Candidate& cand) -> std::optional<Hit> {
        PolySystem sys = build_system(cand.ms, target, mu_tilde, sigma_tilde, modulus,
                                      halfwidth, lmax, config.epsilon, regime);
        const long long kk = std::max<long long>(1, cand.ms.interval_mass());
        const double precision = config.epsilon / (2.0 * static_cast<double>(kk));
        auto assignment = solve(sys, precision, sopts);
        if (!assignment) return std::nullopt;
        return Hit{cand.index, cand.ms, std::move(sys), std::move(*assignment)};
    };

    long long stream_index = 0;
    while (!best) {
        // Collect a batch of candidates in stream order.
        std::vector<Candidate> batch;
        while (static_cast<long long>(batch.size()) < batch_size) {
            if (tried + static_cast<long long>(batch.size()) >= config.max_systems) break;
            auto ms = stream.next();
            if (!ms) break;
            batch.push_back({stream_index++, std::move(*ms)});
        }
        if (batch.empty()) break;
        tried += static_cast<long long>(batch.size());

        if (threads == 1 || batch.size() == 1) {
            for (const auto& cand : batch) {
                ++solved;
                auto hit = solve_candidate(cand);
                if (hit) {
                    best = std::move(hit);
                    break;
                }
            }
        } else {
            std::vector<std::optional<Hit>> results(batch.size());
            std::atomic<std::size_t> cursor{0};
            auto worker = [&]() {
                while (true) {
                    const std::size_t i = cursor.fetch_add(1);
                    if (i >= batch.size()) break;
                    results[i] = solve_candidate(batch[i]);
                }
            };
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
            solved += static_cast<long long>(batch.size());
            for (auto& r : results) {
                if (r) {
                    best = std::move(*r);  // smallest stream index wins
                    break;
                }
            }
        }
    }

    if (!best) {
        std::string reason = stream.hit_step_cap()
                                 ? "enumeration step cap reached"
                                 : (tried >= config.max_systems ? "max_systems reached"
                                                                : "stream exhausted");
        throw LearnExhausted("no feasible system: " + reason, tried, solved, mu_tilde,
                             sigma_tilde, modulus, halfwidth);
    }

    LearnReport rep{expand_solution(best->ms, best->sys, best->assignment),
                    "system", tried, solved, mu_tilde, sigma_tilde,
                    modulus, halfwidth, 0.0, best->index};
    return finish(rep);
}

}  // namespace pbd
