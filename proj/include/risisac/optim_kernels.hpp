// SPDX-License-Identifier: Apache-2.0
//
// risisac: RIS-aided sensing and ISAC beamforming toolkit
// Copyright (C) 2026 The risisac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "risisac/common.hpp"

#include <functional>
#include <span>
#include <type_traits>
#include <vector>

namespace risisac {

struct SolverConfig {
    double tol_rel = 1e-8;
    int max_iter = 2000;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double initial_step = 1.0;
    int restarts = 8;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(tol_rel > 0.0)) throw InvalidInput("SolverConfig: tol_rel must be > 0");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidInput("SolverConfig: backtrack must be in (0,1)");
        if (max_iter < 0) throw InvalidInput("SolverConfig: max_iter must be >= 0");
        if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw InvalidInput("SolverConfig: armijo_c must be in (0,1)");
        detail::require_positive(initial_step, "SolverConfig initial_step");
        if (restarts < 1) throw InvalidInput("SolverConfig: restarts must be >= 1");
    }

    bool operator==(const SolverConfig&) const = default;
};

template <typename Scalar>
using DynVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct ProjectedGradientResult {
    DynVec<Scalar> x;
    double objective = kInf;
    std::vector<double> trace;  // accepted objective values, starting at the projected init
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline bool relative_change_below(double before, double after, double tol) {
    const double scale = std::max(std::abs(before), std::numeric_limits<double>::min());
    return std::abs(before - after) <= tol * scale;
}

}  // namespace detail

// Projected gradient descent with Armijo backtracking.
//
// `gradient` returns d f / d conj(x) for complex x (the Wirtinger
// co-gradient) and the ordinary gradient for real x; both point along the
// steepest ascent direction. A trial point x - s g must satisfy the Armijo
// condition on the ambient objective and must also not increase f after
// projection. The step doubles after each accepted iteration.
template <typename Scalar, typename Objective, typename Gradient, typename Projection>
ProjectedGradientResult<Scalar> projected_gradient(Objective&& objective, Gradient&& gradient,
                                                   Projection&& projection, const DynVec<Scalar>& init,
                                                   const SolverConfig& cfg) {
    cfg.validate();
    ProjectedGradientResult<Scalar> r;
    r.x = projection(init);
    r.objective = objective(r.x);
    r.trace.push_back(r.objective);

    double step = cfg.initial_step;
    constexpr int kMaxBacktracks = 200;
    for (int it = 0; it < cfg.max_iter; ++it) {
        r.iterations = it + 1;
        const DynVec<Scalar> g = gradient(r.x);
        const double gn2 = g.squaredNorm();
        if (!(gn2 > 0.0) || !std::isfinite(gn2)) {
            r.converged = gn2 == 0.0;
            break;
        }

        bool accepted = false;
        double s = step;
        DynVec<Scalar> x_new;
        double f_new = kInf;
        for (int bt = 0; bt < kMaxBacktracks; ++bt, s *= cfg.backtrack) {
            const DynVec<Scalar> ambient = r.x - s * g;
            const double f_amb = objective(ambient);
            if (!(f_amb <= r.objective - cfg.armijo_c * s * gn2)) continue;
            x_new = projection(ambient);
            f_new = objective(x_new);
            if (f_new <= r.objective) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            r.converged = true;  // no descent available at any step size
            break;
        }

        const double f_old = r.objective;
        r.x = std::move(x_new);
        r.objective = f_new;
        r.trace.push_back(f_new);
        step = s / cfg.backtrack;
        if (detail::relative_change_below(f_old, f_new, cfg.tol_rel)) {
            r.converged = true;
            break;
        }
    }
    return r;
}

struct AlternatingResult {
    std::vector<double> trace;  // objective after init and after every outer sweep
    int iterations = 0;
    bool converged = false;
};

// Block-coordinate driver. Each block mutates caller-owned state and must
// not increase `objective`; the driver only sequences and monitors.
inline AlternatingResult alternating_minimize(std::span<const std::function<void()>> blocks,
                                              const std::function<double()>& objective,
                                              const SolverConfig& cfg) {
    cfg.validate();
    AlternatingResult r;
    double f = objective();
    r.trace.push_back(f);
    for (int it = 0; it < cfg.max_iter; ++it) {
        for (const auto& block : blocks) block();
        const double f_new = objective();
        r.trace.push_back(f_new);
        r.iterations = it + 1;
        const bool small = detail::relative_change_below(f, f_new, cfg.tol_rel);
        f = f_new;
        if (small) {
            r.converged = true;
            break;
        }
    }
    return r;
}

// Central finite differences. For complex x returns the co-gradient
// d f / d conj(x) = (df/dRe + j df/dIm) / 2, matching the analytic
// gradients used by the solvers.
template <typename Scalar, typename Objective>
DynVec<Scalar> finite_difference_gradient(Objective&& objective, const DynVec<Scalar>& x, double step) {
    detail::require_positive(step, "finite difference step");
    DynVec<Scalar> g(x.size());
    DynVec<Scalar> probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Scalar orig = probe[i];
        probe[i] = orig + Scalar(step);
        const double fp = objective(probe);
        probe[i] = orig - Scalar(step);
        const double fm = objective(probe);
        const double d_re = (fp - fm) / (2.0 * step);
        if constexpr (std::is_same_v<Scalar, cplx>) {
            probe[i] = orig + kJ * step;
            const double fpi = objective(probe);
            probe[i] = orig - kJ * step;
            const double fmi = objective(probe);
            const double d_im = (fpi - fmi) / (2.0 * step);
            g[i] = 0.5 * cplx(d_re, d_im);
        } else {
            g[i] = d_re;
        }
        probe[i] = orig;
    }
    return g;
}

// Runs `solve(restart_index)` for every restart and keeps the result with
// the smallest `score`. Ties keep the earliest restart.
template <typename Solve, typename Score>
auto multi_start(int restarts, Solve&& solve, Score&& score) {
    if (restarts < 1) throw InvalidInput("multi_start: restarts must be >= 1");
    auto best = solve(0);
    double best_score = score(best);
    for (int k = 1; k < restarts; ++k) {
        auto cand = solve(k);
        const double sc = score(cand);
        if (sc < best_score) {
            best_score = sc;
            best = std::move(cand);
        }
    }
    return best;
}

}  // namespace risisac
