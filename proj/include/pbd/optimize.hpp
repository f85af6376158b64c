#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace pbd {

// Box-constrained smooth minimization: projected gradient with
// Barzilai-Borwein step lengths and an Armijo backtracking fallback.
// Good enough for the low-dimensional penalty problems in this project.

struct MinimizeOptions {
    int max_iters = 200;
    double grad_tol = 1e-12;
    double step_tol = 1e-14;
    double f_abort = -1.0;    // stop early if f stalls above this (< 0: off)
    int abort_after = 0;      // iterations before the stall check kicks in
};

struct MinimizeResult {
    std::vector<double> x;
    double f = 0.0;
    int iters = 0;
    bool converged = false;
};

// objective(x, grad) must fill grad (same size as x) and return f(x).
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

inline void project_box(std::vector<double>& x, std::span<const double> lo,
                        std::span<const double> hi) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lo[i]) x[i] = lo[i];
        if (x[i] > hi[i]) x[i] = hi[i];
    }
}

inline MinimizeResult minimize_box(const Objective& objective, std::vector<double> x0,
                                   std::span<const double> lo, std::span<const double> hi,
                                   const MinimizeOptions& opts = {}) {
    const std::size_t dim = x0.size();
    MinimizeResult res;
    project_box(x0, lo, hi);
    std::vector<double> x = x0, g(dim), x_prev(dim), g_prev(dim), trial(dim), gt(dim);
    double f = objective(x, g);
    double step = 1.0;
    // Initial step from gradient scale.
    double gnorm = 0.0;
    for (double v : g) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    if (gnorm > 0.0) step = std::max(1e-8, 0.1 / gnorm);

    for (int it = 0; it < opts.max_iters; ++it) {
        // Projected-gradient stationarity measure.
        double pg = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double xi = x[i] - g[i];
            xi = std::min(std::max(xi, lo[i]), hi[i]);
            pg = std::max(pg, std::fabs(xi - x[i]));
        }
        if (pg < opts.grad_tol) {
            res.converged = true;
            break;
        }
        if (opts.f_abort >= 0.0 && it >= opts.abort_after && f > opts.f_abort) break;

        // Backtracking line search along the projected path.
        double t = step;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < dim; ++i) trial[i] = x[i] - t * g[i];
            project_box(trial, lo, hi);
            double decrease = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                decrease += g[i] * (x[i] - trial[i]);
            }
            f_new = objective(trial, gt);
            if (f_new <= f - 1e-4 * decrease || decrease <= opts.step_tol) {
                accepted = decrease > opts.step_tol;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            res.converged = true;  // no descent direction left inside the box
            break;
        }
        x_prev = x;
        g_prev = g;
        x = trial;
        g = gt;
        f = f_new;

        // Barzilai-Borwein step for the next iteration.
        double sy = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double s = x[i] - x_prev[i];
            const double y = g[i] - g_prev[i];
            sy += s * y;
            ss += s * s;
        }
        step = (sy > 1e-300) ? ss / sy : t * 2.0;
        step = std::min(std::max(step, 1e-12), 1e8);
        res.iters = it + 1;
    }
    res.x = std::move(x);
    res.f = f;
    return res;
}

}  // namespace pbd
