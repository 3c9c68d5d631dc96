/**
 * @file volterra.hpp
 * @brief Both sides of the boundary integral equation
 *
 *     G(t, b, j) = J(t, b, j) - int_t^T K(t, r, b, j) dr,
 *     J = E[X_T],  K = E[LV(r, X_r, beta_r) 1{X_r > b(r, beta_r)}],
 *
 * evaluated at the extracted boundary. LV comes from the discrete generator
 * on the stored V surface, so the residual measures how consistent the
 * boundary is with the solved surfaces.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "ultimax/boundary.hpp"
#include "ultimax/error.hpp"
#include "ultimax/parallel.hpp"
#include "ultimax/paths.hpp"
#include "ultimax/statistics.hpp"
#include "ultimax/value.hpp"

namespace ultimax {

inline constexpr std::size_t kDefaultQuadratureNodes = 64;
inline constexpr std::size_t kVolterraRowStride = 10;

/// Surfaces, LV and boundary from one solve.
struct VolterraContext {
    const ValueSurfaces& surfaces;
    Surface LV;
    const Boundary& boundary;

    VolterraContext(const ValueSurfaces& s, const Boundary& b) : surfaces(s), LV(lv_surface(s)), boundary(b) {
        if (!(b.grid() == s.grid())) throw Error(ErrorCode::InvalidArgument, "boundary and surfaces use different grids");
    }

    /// log b(r, j) from the smoothed boundary; +inf for the sentinel.
    double log_level(double r, std::size_t j) const { return std::log(boundary.smoothed_at(r, j)); }

    /// LV(r, x, j) 1{x > b(r, j)} at z = log x; counts samples beyond z_max.
    double integrand(double r, double z, std::size_t j, double log_b, std::size_t& extrapolated) const {
        if (!(z > log_b)) return 0.0;
        if (z > surfaces.grid().z_max()) ++extrapolated;
        return LV.interpolate(r, z, j);
    }

    double integrand(double r, double z, std::size_t j, std::size_t& extrapolated) const {
        return integrand(r, z, j, log_level(r, j), extrapolated);
    }
};

/// E[X_T] from (t, x, j) with the exact running maximum.
inline Estimate estimate_J(const ValidatedModel& model, double t, double x, std::size_t j, std::size_t n_paths,
                           std::uint64_t seed, std::size_t threads = default_threads()) {
    if (!(x >= 1.0)) throw Error(ErrorCode::InvalidArgument, "J requires x >= 1");
    if (t >= model.horizon()) return {x, 0.0, n_paths};
    const PathSimulator sim(model, {t, model.horizon()}, j, MaxMonitoring::BrownianBridge);
    const double log_x = std::log(x);
    const RunningStats stats = parallel_reduce<RunningStats>(
        n_paths, threads,
        [&](std::size_t begin, std::size_t end, RunningStats& acc) {
            for (std::size_t p = begin; p < end; ++p) {
                double z = 0.0;
                sim.walk(path_seed(seed, p), [&](std::size_t, std::size_t, double log_y, double log_max) {
                    z = std::max(log_x, log_max) - log_y;
                });
                acc.add(std::exp(z));
            }
        },
        [](RunningStats& total, const RunningStats& part) { total.merge(part); });
    return stats.estimate();
}

/// K(t, r, x, j) for t <= r <= T.
inline Estimate estimate_K(const ValidatedModel& model, const VolterraContext& ctx, double t, double r, double x,
                           std::size_t j, std::size_t n_paths, std::uint64_t seed,
                           std::size_t threads = default_threads()) {
    if (!(t <= r && r <= model.horizon())) throw Error(ErrorCode::InvalidArgument, "K requires t <= r <= T");
    if (!(x >= 1.0)) throw Error(ErrorCode::InvalidArgument, "K requires x >= 1");
    std::size_t extrapolated = 0;
    if (r == t) return {ctx.integrand(t, std::log(x), j, extrapolated), 0.0, n_paths};
    const PathSimulator sim(model, {t, r}, j, MaxMonitoring::BrownianBridge);
    const double log_x = std::log(x);
    const RunningStats stats = parallel_reduce<RunningStats>(
        n_paths, threads,
        [&](std::size_t begin, std::size_t end, RunningStats& acc) {
            std::size_t ignored = 0;
            for (std::size_t p = begin; p < end; ++p) {
                double z = 0.0;
                std::size_t state = j;
                sim.walk(path_seed(seed, p), [&](std::size_t, std::size_t s, double log_y, double log_max) {
                    z = std::max(log_x, log_max) - log_y;
                    state = s;
                });
                acc.add(ctx.integrand(r, z, state, ignored));
            }
        },
        [](RunningStats& total, const RunningStats& part) { total.merge(part); });
    return stats.estimate();
}

struct VolterraRow {
    double t = 0.0;
    std::size_t j = 0;
    double b = 0.0;
    double lhs = 0.0;  ///< G(t, b, j)
    Estimate J;
    Estimate K_integral;
    Estimate residual;  ///< lhs - (J - int K), per-path paired
    double relative_residual = 0.0;
};

struct VolterraReport {
    std::vector<VolterraRow> rows;
    std::size_t extrapolated = 0;  ///< integrand samples beyond z_max
    std::size_t n_paths = 0;
    std::size_t n_quad = 0;

    /// Median |relative residual| over rows with t < T, optionally for one regime.
    double median_abs_relative(std::size_t j = std::numeric_limits<std::size_t>::max()) const {
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.t < horizon && (j == std::numeric_limits<std::size_t>::max() || r.j == j))
                v.push_back(std::abs(r.relative_residual));
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }

    double max_abs_relative() const {
        double m = 0.0;
        for (const auto& r : rows) m = std::max(m, std::abs(r.relative_residual));
        return m;
    }

    double horizon = 0.0;
};

/**
 * Residual rows at every stride-th t-node (and at T). Rows whose boundary is
 * the sentinel have no equation to check and are skipped. Each row simulates
 * n_paths paths from (t, b) over n_quad equally spaced times in [t, T]; the
 * time integral is the trapezoid rule applied path by path.
 */
inline VolterraReport volterra_residual(const ValidatedModel& model, const VolterraContext& ctx, std::size_t n_paths,
                                        std::size_t n_quad, std::uint64_t seed, std::size_t stride = kVolterraRowStride,
                                        std::size_t threads = default_threads()) {
    if (n_quad < 2) throw Error(ErrorCode::InvalidArgument, "n_quad must be >= 2");
    if (n_paths < 2) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 2");
    if (stride == 0) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
    const Grid& g = ctx.surfaces.grid();
    const Boundary& boundary = ctx.boundary;
    VolterraReport report;
    report.n_paths = n_paths;
    report.n_quad = n_quad;
    report.horizon = g.horizon();

    std::vector<std::size_t> nodes;
    for (std::size_t n = 0; n < g.n_t(); n += stride) nodes.push_back(n);
    nodes.push_back(g.n_t());

    for (std::size_t n : nodes)
        for (std::size_t j = 0; j < g.regimes(); ++j) {
            if (boundary.is_sentinel(n, j)) continue;
            VolterraRow row;
            row.t = g.t(n);
            row.j = j;
            row.b = boundary.smoothed(n, j);
            row.lhs = ctx.surfaces.G.interpolate(row.t, std::log(row.b), j);
            if (n == g.n_t()) {
                row.lhs = row.b;
                row.J = {row.b, 0.0, n_paths};
                row.K_integral = {0.0, 0.0, n_paths};
                row.residual = {0.0, 0.0, n_paths};
                report.rows.push_back(row);
                continue;
            }

            const auto times = PathSimulator::uniform_times(row.t, g.horizon(), n_quad - 1);
            const PathSimulator sim(model, times, j, MaxMonitoring::BrownianBridge);
            const double h = (g.horizon() - row.t) / static_cast<double>(n_quad - 1);
            const double log_b = std::log(row.b);
            const std::uint64_t row_seed = derive_seed(seed, n * g.regimes() + j);
            std::vector<double> log_levels(n_quad * g.regimes());
            for (std::size_t k = 0; k < n_quad; ++k)
                for (std::size_t i = 0; i < g.regimes(); ++i) log_levels[k * g.regimes() + i] = ctx.log_level(times[k], i);

            struct Partial {
                RunningStats J, K, residual;
                std::size_t extrapolated = 0;
            };
            const Partial total = parallel_reduce<Partial>(
                n_paths, threads,
                [&](std::size_t begin, std::size_t end, Partial& acc) {
                    for (std::size_t p = begin; p < end; ++p) {
                        double integral = 0.0;
                        double z = 0.0;
                        sim.walk(path_seed(row_seed, p), [&](std::size_t k, std::size_t s, double log_y, double log_max) {
                            z = std::max(log_b, log_max) - log_y;
                            const double w = (k == 0 || k + 1 == n_quad) ? 0.5 * h : h;
                            integral += w * ctx.integrand(times[k], z, s, log_levels[k * g.regimes() + s], acc.extrapolated);
                        });
                        const double x_T = std::exp(z);
                        acc.J.add(x_T);
                        acc.K.add(integral);
                        acc.residual.add(row.lhs - (x_T - integral));
                    }
                },
                [](Partial& sum, const Partial& part) {
                    sum.J.merge(part.J);
                    sum.K.merge(part.K);
                    sum.residual.merge(part.residual);
                    sum.extrapolated += part.extrapolated;
                });
            row.J = total.J.estimate();
            row.K_integral = total.K.estimate();
            row.residual = total.residual.estimate();
            row.relative_residual = row.residual.value / row.lhs;
            report.extrapolated += total.extrapolated;
            report.rows.push_back(row);
        }
    return report;
}

/// Volterra CSV: t,j,lhs,J,J_se,K_integral,K_se,residual,relative_residual.
inline void write_volterra_csv(const VolterraReport& r, std::ostream& os) {
    const auto precision = os.precision(12);
    os << "t,j,lhs,J,J_se,K_integral,K_se,residual,relative_residual\n";
    for (const auto& row : r.rows)
        os << row.t << ',' << row.j + 1 << ',' << row.lhs << ',' << row.J.value << ',' << row.J.std_error << ','
           << row.K_integral.value << ',' << row.K_integral.std_error << ',' << row.residual.value << ','
           << row.relative_residual << '\n';
    os.precision(precision);
}

}  // namespace ultimax
