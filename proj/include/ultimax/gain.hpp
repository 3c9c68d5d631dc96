/**
 * @file gain.hpp
 * @brief Gain function G(t,x,j) = E[max(x, Yhat_{t,T}/Y_t) | beta_t = j], its
 * x-derivative, the generator image LG and the sign-change level h(t,j).
 *
 * G is computed two independent ways: exact Monte Carlo sampling of the
 * running maximum, and the backward PDE
 *
 *     G_t - mu x G_x + sigma^2/2 x^2 G_xx + mu G + sum_i q_ji G_i = 0,
 *     G(T,x,j) = x,  G_x(t,1+,j) = 0,  G_xx = 0 at x_max.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "ultimax/grid.hpp"
#include "ultimax/model.hpp"
#include "ultimax/parallel.hpp"
#include "ultimax/paths.hpp"
#include "ultimax/statistics.hpp"
#include "ultimax/stepper.hpp"

namespace ultimax {

/// Monte Carlo G at one point; the running maximum is sampled exactly.
inline Estimate g_monte_carlo(const ValidatedModel& model, double t, double x, std::size_t j,
                              std::size_t n_paths, std::uint64_t seed,
                              std::size_t threads = default_threads()) {
    if (!(x >= 1.0)) throw Error(ErrorCode::InvalidArgument, "G requires x >= 1");
    if (t > model.horizon()) throw Error(ErrorCode::InvalidArgument, "G requires t <= T");
    if (t == model.horizon()) return {x, 0.0, n_paths};
    const PathSimulator sim(model, {t, model.horizon()}, j, MaxMonitoring::BrownianBridge);
    const RunningStats stats = parallel_reduce<RunningStats>(
        n_paths, threads,
        [&](std::size_t begin, std::size_t end, RunningStats& acc) {
            SinglePath path;
            for (std::size_t p = begin; p < end; ++p) {
                sim.simulate(path_seed(seed, p), path);
                acc.add(std::max(x, path.ymax.back() / path.y.front()));
            }
        },
        [](RunningStats& total, const RunningStats& part) { total.merge(part); });
    return stats.estimate();
}

/// Operator coefficients of the G equation for each regime.
inline std::vector<OperatorCoefficients> gain_coefficients(const ValidatedModel& model) {
    std::vector<OperatorCoefficients> c(model.regimes());
    for (std::size_t j = 0; j < model.regimes(); ++j) {
        c[j].drift = -model.mu(j);
        c[j].diffusion = 0.5 * model.variance(j);
        c[j].reaction = model.mu(j);
        // Negative drift makes x_max an inflow edge; G = x there to O(P(max > x_max)).
        c[j].top = model.mu(j) < 0.0 ? TopCondition::Dirichlet : TopCondition::Outflow;
    }
    return c;
}

inline void check_grid_matches(const ValidatedModel& model, const Grid& grid) {
    if (grid.regimes() != model.regimes() || grid.horizon() != model.horizon())
        throw Error(ErrorCode::InvalidArgument, "grid does not match model");
}

/// G after each substep of the last interval, nearest to T first; back() is G at t_{N-1}.
inline std::vector<Slices> terminal_gain_substeps(const ValidatedModel& model, const Grid& grid) {
    check_grid_matches(model, grid);
    const BackwardStepper stepper(model, grid, gain_coefficients(model));
    Slices g(grid.regimes(), std::vector<double>(grid.n_x()));
    for (auto& slice : g)
        for (std::size_t k = 0; k < grid.n_x(); ++k) slice[k] = grid.x(k);
    const std::vector<double> top(grid.regimes(), grid.x_max());
    std::vector<Slices> out;
    for (std::size_t s = 0; s < kTerminalSubsteps; ++s) {
        stepper.substep(g, top);
        out.push_back(g);
    }
    return out;
}

inline Surface g_pde(const ValidatedModel& model, const Grid& grid) {
    check_grid_matches(model, grid);
    const BackwardStepper stepper(model, grid, gain_coefficients(model));
    Surface G(Field::G, grid);
    const std::size_t N = grid.n_t();
    const Slices last = terminal_gain_substeps(model, grid).back();
    for (std::size_t j = 0; j < grid.regimes(); ++j)
        for (std::size_t k = 0; k < grid.n_x(); ++k) {
            G(N, k, j) = grid.x(k);
            G(N - 1, k, j) = last[j][k];
        }
    const std::vector<double> top(grid.regimes(), grid.x_max());
    for (std::size_t n = N - 1; n-- > 0;) stepper.step(G, n, G, top);
    return G;
}

struct DerivativeSurface {
    Surface values;
    std::size_t clamped = 0;  ///< nodes moved into [0, 1]
    std::size_t nodes = 0;

    double clamp_rate() const noexcept {
        return nodes == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(nodes);
    }
};

/// dG/dx = P(Yhat/Y < x): central differences inside, 0 at x = 1 (reflection),
/// one-sided at x_max; clamped to [0, 1].
inline DerivativeSurface dG_dx(const Surface& G) {
    const Grid& grid = G.grid();
    DerivativeSurface out{Surface(Field::dGdx, grid)};
    std::vector<double> xfx(grid.n_x());
    for (std::size_t n = 0; n <= grid.n_t(); ++n)
        for (std::size_t j = 0; j < grid.regimes(); ++j) {
            x_derivative(grid, G.slice(n, j), xfx);
            auto d = out.values.slice(n, j);
            for (std::size_t k = 0; k < grid.n_x(); ++k) {
                const double raw = xfx[k] / grid.x(k);
                d[k] = std::clamp(raw, 0.0, 1.0);
                // Round-off at the terminal slice (G = x) is not a clamp event.
                if (std::abs(d[k] - raw) > 1e-12) ++out.clamped;
                ++out.nodes;
            }
        }
    return out;
}

/// LG = x sigma^2 dG/dx - mu G, pointwise.
inline Surface lg(const Surface& G, const Surface& dGdx, const ValidatedModel& model) {
    const Grid& grid = G.grid();
    if (!(dGdx.grid() == grid)) throw Error(ErrorCode::InvalidArgument, "surfaces on different grids");
    Surface out(Field::LG, grid);
    for (std::size_t n = 0; n <= grid.n_t(); ++n)
        for (std::size_t j = 0; j < grid.regimes(); ++j)
            for (std::size_t k = 0; k < grid.n_x(); ++k)
                out(n, k, j) = grid.x(k) * model.variance(j) * dGdx(n, k, j) - model.mu(j) * G(n, k, j);
    return out;
}

/**
 * h(t,j) = inf{x : LG(t,y,j) >= 0 for all y >= x} per time node, with the
 * sign test relaxed to LG >= -eps_sign. +inf when even the top node fails.
 */
inline std::vector<double> h_level(const Surface& LG, std::size_t j, double eps_sign) {
    const Grid& grid = LG.grid();
    std::vector<double> h(grid.n_t() + 1, std::numeric_limits<double>::infinity());
    for (std::size_t n = 0; n <= grid.n_t(); ++n) {
        const auto s = LG.slice(n, j);
        std::size_t k = grid.n_x();
        while (k > 0 && s[k - 1] >= -eps_sign) --k;
        if (k < grid.n_x()) h[n] = grid.x(k);
    }
    return h;
}

}  // namespace ultimax
