#pragma once

// Nelder-Mead downhill simplex. Derivative free, so it tolerates the
// discontinuous sign(omega) friction term in the pendulum loss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace vj::optim {

struct SimplexOptions {
    int max_iters = 400;
    /// Converged when both the spread of objective values and the simplex
    /// diameter (in the caller's coordinates) drop below these.
    double f_tol = 1e-10;
    double x_tol = 1e-6;
    /// Initial edge length per coordinate; a scalar broadcast when size 1.
    std::vector<double> initial_step{0.1};
};

struct SimplexResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

template <typename Objective>
SimplexResult nelder_mead(Objective&& objective, std::span<const double> start,
                          const SimplexOptions& opt = {}) {
    const std::size_t n = start.size();
    constexpr double reflect = 1.0, expand = 2.0, contract = 0.5, shrink = 0.5;

    SimplexResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return objective(std::span<const double>(x));
    };

    std::vector<std::vector<double>> pts(n + 1, std::vector<double>(start.begin(), start.end()));
    for (std::size_t i = 0; i < n; ++i) {
        const double step = opt.initial_step.size() == n ? opt.initial_step[i] : opt.initial_step.front();
        pts[i + 1][i] += step;
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);

    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> p2(n + 1);
        std::vector<double> f2(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            p2[i] = std::move(pts[order[i]]);
            f2[i] = fv[order[i]];
        }
        pts = std::move(p2);
        fv = std::move(f2);
    };

    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(pts[i][j] - pts[0][j]));
        }
        return d;
    };

    sort_simplex();
    for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
        if (std::abs(fv[n] - fv[0]) <= opt.f_tol && diameter() <= opt.x_tol) {
            res.converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);
        }
        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + reflect * (centroid[j] - pts[n][j]);
        const double fr = eval(trial);

        if (fr < fv[0]) {
            for (std::size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + expand * (trial[j] - centroid[j]);
            const double fe = eval(trial2);
            if (fe < fr) {
                pts[n] = trial2;
                fv[n] = fe;
            } else {
                pts[n] = trial;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            pts[n] = trial;
            fv[n] = fr;
        } else {
            const bool outside = fr < fv[n];
            for (std::size_t j = 0; j < n; ++j) {
                trial2[j] = outside ? centroid[j] + contract * (trial[j] - centroid[j])
                                    : centroid[j] + contract * (pts[n][j] - centroid[j]);
            }
            const double fc = eval(trial2);
            if (fc < (outside ? fr : fv[n])) {
                pts[n] = trial2;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[0][j] + shrink * (pts[i][j] - pts[0][j]);
                    fv[i] = eval(pts[i]);
                }
            }
        }
        sort_simplex();
    }
    res.x = pts[0];
    res.f = fv[0];
    return res;
}

}  // namespace vj::optim
