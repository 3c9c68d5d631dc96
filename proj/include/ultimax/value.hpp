/**
 * @file value.hpp
 * @brief Obstacle problem for V(t,x,j) = inf_tau E[G(tau, X_tau, beta_tau)].
 *
 * Backward induction with the generator of the ratio process X,
 *
 *     L f = f_t + (sigma^2 - mu) x f_x + sigma^2/2 x^2 f_xx + sum_i q_ji f_i,
 *
 * one implicit linear step per time slice followed by the projection
 * V <- min(V, G). The reflecting edge x = 1 carries f_x = 0.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ultimax/gain.hpp"
#include "ultimax/grid.hpp"
#include "ultimax/model.hpp"
#include "ultimax/stepper.hpp"

namespace ultimax {

struct ValueSurfaces {
    Surface V;
    Surface G;
    Surface F;  ///< V - G <= 0
    ValidatedModel model;
    Slices before_last;  ///< V one substep before t_{N-1}
    double substep_dt = 0.0;

    const Grid& grid() const noexcept { return V.grid(); }
};

inline std::vector<OperatorCoefficients> value_coefficients(const ValidatedModel& model) {
    std::vector<OperatorCoefficients> c(model.regimes());
    for (std::size_t j = 0; j < model.regimes(); ++j) {
        c[j].drift = model.variance(j) - model.mu(j);
        c[j].diffusion = 0.5 * model.variance(j);
        c[j].reaction = 0.0;
        // Upward drift in x: x_max is an inflow edge and lies in the stopping region.
        c[j].top = c[j].drift > 0.0 ? TopCondition::Dirichlet : TopCondition::Outflow;
    }
    return c;
}

inline ValueSurfaces solve_value(const ValidatedModel& model, const Grid& grid, const Surface& G) {
    if (!(G.grid() == grid) || G.field() != Field::G)
        throw Error(ErrorCode::InvalidArgument, "solve_value needs the G surface on the same grid");
    const BackwardStepper stepper(model, grid, value_coefficients(model));
    ValueSurfaces out{Surface(Field::V, grid), G, Surface(Field::F, grid), model, {}, stepper.substep_dt()};
    Surface& V = out.V;
    const std::size_t m = grid.regimes();
    const std::size_t N = grid.n_t();
    std::vector<double> top(m);

    Slices v(m, std::vector<double>(grid.n_x()));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < grid.n_x(); ++k) V(N, k, j) = v[j][k] = grid.x(k);
    const auto g_sub = terminal_gain_substeps(model, grid);
    for (const Slices& g : g_sub) {
        out.before_last = v;
        for (std::size_t j = 0; j < m; ++j) top[j] = g[j].back();
        stepper.substep(v, top);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < grid.n_x(); ++k) v[j][k] = std::min(v[j][k], g[j][k]);
    }
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < grid.n_x(); ++k) V(N - 1, k, j) = v[j][k];

    for (std::size_t n = N - 1; n-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) top[j] = G(n, grid.n_x() - 1, j);
        stepper.step(V, n, V, top);
        for (std::size_t j = 0; j < m; ++j) {
            auto v = V.slice(n, j);
            const auto g = G.slice(n, j);
            for (std::size_t k = 0; k < grid.n_x(); ++k) v[k] = std::min(v[k], g[k]);
        }
    }
    for (std::size_t n = 0; n <= grid.n_t(); ++n)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < grid.n_x(); ++k) out.F(n, k, j) = V(n, k, j) - G(n, k, j);
    return out;
}

/**
 * Discrete generator applied to V, matching the time stepping:
 * LV^n = (V^{n+1} - V^n)/dt + A V^n + Q V^{n+1}, with the last substep in
 * place of the full step on slice N-1. It vanishes identically at
 * continuation nodes and approximates L G plus the regime-coupling
 * correction on the stopping set. The terminal slice copies slice N-1.
 */
inline Surface lv_surface(const ValueSurfaces& s) {
    const Grid& grid = s.grid();
    const auto coefficients = value_coefficients(s.model);
    Surface LV(Field::LV, grid);
    const double dt = grid.dt();
    const std::size_t m = grid.regimes();
    for (std::size_t j = 0; j < m; ++j) {
        const SpatialOperator op(grid, coefficients[j]);
        for (std::size_t n = 0; n < grid.n_t(); ++n) {
            const bool last = n + 1 == grid.n_t();
            const double h = last ? s.substep_dt : dt;
            const auto vn = s.V.slice(n, j);
            for (std::size_t k = 0; k < grid.n_x(); ++k) {
                auto next = [&](std::size_t i) { return last ? s.before_last[i][k] : s.V(n + 1, k, i); };
                double value = (next(j) - vn[k]) / h + op.apply_at(vn, k);
                for (std::size_t i = 0; i < m; ++i) value += s.model.q(j, i) * next(i);
                LV(n, k, j) = value;
            }
        }
        for (std::size_t k = 0; k < grid.n_x(); ++k) LV(grid.n_t(), k, j) = LV(grid.n_t() - 1, k, j);
    }
    return LV;
}

struct NormalReflectionReport {
    std::vector<double> slope;  ///< (V_1 - V_0)/(x_1 - x_0) per (n < N, j), index n*m + j
    double max_abs_slope = 0.0;
    double dx = 0.0;            ///< x_1 - x_0

    double constant() const noexcept { return dx > 0.0 ? max_abs_slope / dx : 0.0; }
};

/// One-sided slope of V at x = 1 for every t < T.
inline NormalReflectionReport check_normal_reflection(const ValueSurfaces& s) {
    const Grid& grid = s.grid();
    NormalReflectionReport r;
    r.dx = grid.x(1) - grid.x(0);
    for (std::size_t n = 0; n < grid.n_t(); ++n)
        for (std::size_t j = 0; j < grid.regimes(); ++j) {
            const double slope = (s.V(n, 1, j) - s.V(n, 0, j)) / r.dx;
            r.slope.push_back(slope);
            r.max_abs_slope = std::max(r.max_abs_slope, std::abs(slope));
        }
    return r;
}

struct MonotoneReport {
    std::size_t violations = 0;
    double max_violation = 0.0;  ///< max of F(t_k) - F(t_{k+1})
    double tolerance = 0.0;
    double max_abs_F = 0.0;
};

/// F(t_k, x, j) <= F(t_{k+1}, x, j) + rel_tol max|F| at every node; needs mu >= 0.
inline MonotoneReport check_F_monotone_t(const ValueSurfaces& s, double rel_tol = 1e-6) {
    if (!s.model.all_drifts_nonnegative())
        throw Error(ErrorCode::NotApplicable, "F time-monotonicity requires mu(j) >= 0 for all j");
    const Grid& grid = s.grid();
    MonotoneReport r;
    for (double f : s.F.values()) r.max_abs_F = std::max(r.max_abs_F, std::abs(f));
    r.tolerance = rel_tol * r.max_abs_F;
    for (std::size_t n = 0; n < grid.n_t(); ++n)
        for (std::size_t j = 0; j < grid.regimes(); ++j)
            for (std::size_t k = 0; k < grid.n_x(); ++k) {
                const double excess = s.F(n, k, j) - s.F(n + 1, k, j);
                r.max_violation = std::max(r.max_violation, excess);
                if (excess > r.tolerance) ++r.violations;
            }
    return r;
}

/// Nodes with t < T, LG < -eps_sign and F >= -tol_abs; the stopping set must avoid {LG < 0}.
inline std::size_t count_containment_violations(const ValueSurfaces& s, const Surface& LG,
                                                double eps_sign, double tol_abs) {
    const Grid& grid = s.grid();
    std::size_t count = 0;
    for (std::size_t n = 0; n < grid.n_t(); ++n)
        for (std::size_t j = 0; j < grid.regimes(); ++j)
            for (std::size_t k = 0; k < grid.n_x(); ++k)
                if (LG(n, k, j) < -eps_sign && s.F(n, k, j) >= -tol_abs) ++count;
    return count;
}

/// max over nodes of min(|F|, |LV|): zero when every node is either stopped or solves LV = 0.
inline double complementarity_residual(const ValueSurfaces& s, const Surface& LV) {
    const Grid& grid = s.grid();
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.n_t(); ++n)
        for (std::size_t j = 0; j < grid.regimes(); ++j)
            for (std::size_t k = 0; k < grid.n_x(); ++k)
                worst = std::max(worst, std::min(std::abs(s.F(n, k, j)), std::abs(LV(n, k, j))));
    return worst;
}

}  // namespace ultimax
