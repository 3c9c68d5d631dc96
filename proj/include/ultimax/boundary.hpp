/**
 * @file boundary.hpp
 * @brief Stopping boundary b(t,j) = inf{x : F(t,x,j) = 0} and its checks.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "ultimax/grid.hpp"
#include "ultimax/value.hpp"

namespace ultimax {

inline constexpr double kSentinel = std::numeric_limits<double>::infinity();

/// Stopping nodes may sit this many nodes below the top stopping run.
inline constexpr std::size_t kDislocationAllowance = 2;

class Boundary {
public:
    Boundary(const Grid& grid, double tol_abs)
        : grid_(grid), tol_abs_(tol_abs),
          raw_((grid.n_t() + 1) * grid.regimes(), kSentinel),
          smoothed_(raw_.size(), kSentinel),
          first_stop_(raw_.size(), grid.n_x()) {}

    const Grid& grid() const noexcept { return grid_; }
    double tol_abs() const noexcept { return tol_abs_; }

    double raw(std::size_t n, std::size_t j) const { return raw_[idx(n, j)]; }
    double smoothed(std::size_t n, std::size_t j) const { return smoothed_[idx(n, j)]; }
    bool is_sentinel(std::size_t n, std::size_t j) const { return std::isinf(raw_[idx(n, j)]); }
    /// Lowest node of the top stopping run; n_x when the slice never stops.
    std::size_t first_stop_node(std::size_t n, std::size_t j) const { return first_stop_[idx(n, j)]; }

    /// Raw level at the latest time node <= t (never looks ahead).
    double level_before(double t, std::size_t j) const { return raw(node_before(t), j); }

    /// Smoothed level linearly interpolated in t; step (previous node) next to a sentinel.
    double smoothed_at(double t, std::size_t j) const {
        const std::size_t n0 = node_before(t);
        if (n0 == grid_.n_t()) return smoothed(n0, j);
        const double a = smoothed(n0, j);
        const double b = smoothed(n0 + 1, j);
        if (std::isinf(a) || std::isinf(b)) return a;
        const double w = std::clamp((t - grid_.t(n0)) / grid_.dt(), 0.0, 1.0);
        return (1.0 - w) * a + w * b;
    }

    std::size_t node_before(double t) const {
        const double f = std::clamp(t / grid_.dt() + 1e-9, 0.0, static_cast<double>(grid_.n_t()));
        return static_cast<std::size_t>(f);
    }

    double& raw_ref(std::size_t n, std::size_t j) { return raw_[idx(n, j)]; }
    double& smoothed_ref(std::size_t n, std::size_t j) { return smoothed_[idx(n, j)]; }
    std::size_t& first_stop_ref(std::size_t n, std::size_t j) { return first_stop_[idx(n, j)]; }

private:
    std::size_t idx(std::size_t n, std::size_t j) const noexcept { return n * grid_.regimes() + j; }

    Grid grid_;
    double tol_abs_;
    std::vector<double> raw_;
    std::vector<double> smoothed_;
    std::vector<std::size_t> first_stop_;
};

/// Three-point median in t per regime; end points are kept.
inline void smooth_boundary(Boundary& b) {
    const Grid& g = b.grid();
    for (std::size_t j = 0; j < g.regimes(); ++j)
        for (std::size_t n = 0; n <= g.n_t(); ++n) {
            if (n == 0 || n == g.n_t()) {
                b.smoothed_ref(n, j) = b.raw(n, j);
                continue;
            }
            std::array<double, 3> w{b.raw(n - 1, j), b.raw(n, j), b.raw(n + 1, j)};
            std::sort(w.begin(), w.end());
            b.smoothed_ref(n, j) = w[1];
        }
}

/**
 * Per slice: the lowest node of the top run with F >= -tol_abs. The level
 * is refined inside the cell below that node: F vanishes quadratically at
 * a smooth-fit boundary, so sqrt(-F) is extrapolated linearly from the two
 * continuation nodes beneath it to its zero.
 */
inline Boundary extract_boundary(const ValueSurfaces& s, double tol_abs) {
    const Grid& g = s.grid();
    Boundary b(g, tol_abs);
    for (std::size_t n = 0; n <= g.n_t(); ++n)
        for (std::size_t j = 0; j < g.regimes(); ++j) {
            const auto F = s.F.slice(n, j);
            const auto stopped = [&](std::size_t k) { return F[k] >= -tol_abs; };
            std::size_t k = g.n_x();
            while (k > 0 && stopped(k - 1)) --k;
            b.first_stop_ref(n, j) = k;
            if (k == g.n_x()) continue;

            std::size_t stray = 0;
            for (std::size_t i = 0; i + kDislocationAllowance < k; ++i)
                if (stopped(i)) ++stray;
            if (stray > 0) {
                std::ostringstream os;
                os << "t=" << g.t(n) << " j=" << j + 1 << ": " << stray
                   << " stopping node(s) below x=" << g.x(k);
                throw Error(ErrorCode::NonMonotoneSlice, os.str());
            }

            double level = g.x(k);
            if (k >= 2) {
                const double r1 = std::sqrt(std::max(0.0, -F[k - 1] - tol_abs));
                const double r2 = std::sqrt(std::max(0.0, -F[k - 2] - tol_abs));
                if (r2 > r1 && r1 > 0.0) {
                    const double x1 = g.x(k - 1);
                    const double root = x1 + (x1 - g.x(k - 2)) * r1 / (r2 - r1);
                    level = std::clamp(root, x1, g.x(k));
                }
            } else if (k == 1) {
                level = g.x(1);
            }
            b.raw_ref(n, j) = level;
        }
    smooth_boundary(b);
    return b;
}

struct BoundaryMonotoneReport {
    std::size_t violations = 0;   ///< b(t_k) < b(t_{k+1}) - local dx
    double max_violation = 0.0;
    double max_jump = 0.0;        ///< max |b(t_k) - b(t_{k+1})| over finite pairs
    double continuity_constant = 0.0;  ///< max_jump / sqrt(dt)
};

/// b nonincreasing in t within one local x-cell, and the discrete continuity metric.
inline BoundaryMonotoneReport check_boundary_monotone(const Boundary& b, const ValidatedModel& model) {
    if (!model.all_drifts_nonnegative())
        throw Error(ErrorCode::NotApplicable, "boundary monotonicity requires mu(j) >= 0 for all j");
    const Grid& g = b.grid();
    BoundaryMonotoneReport r;
    for (std::size_t j = 0; j < g.regimes(); ++j)
        for (std::size_t n = 0; n < g.n_t(); ++n) {
            const double now = b.raw(n, j);
            const double next = b.raw(n + 1, j);
            if (std::isinf(now)) continue;  // sentinel dominates everything
            if (std::isinf(next)) {
                ++r.violations;
                r.max_violation = kSentinel;
                continue;
            }
            const double drop = next - now;
            if (drop > g.dx_near(next)) {
                ++r.violations;
                r.max_violation = std::max(r.max_violation, drop);
            }
            r.max_jump = std::max(r.max_jump, std::abs(drop));
        }
    r.continuity_constant = r.max_jump / std::sqrt(g.dt());
    return r;
}

/// Count of t-nodes where b(t, lower) > b(t, upper) + local dx.
inline std::size_t count_order_violations(const Boundary& b, std::size_t lower, std::size_t upper) {
    const Grid& g = b.grid();
    std::size_t count = 0;
    for (std::size_t n = 0; n <= g.n_t(); ++n) {
        const double lo = b.raw(n, lower);
        const double hi = b.raw(n, upper);
        if (std::isinf(hi)) continue;
        if (std::isinf(lo) || lo > hi + g.dx_near(hi)) ++count;
    }
    return count;
}

struct SmoothFitEntry {
    std::size_t n = 0;
    std::size_t j = 0;
    double level = 0.0;
    double slope_below = 0.0;
    double slope_above = 0.0;
    double mismatch = 0.0;
};

struct SmoothFitReport {
    std::vector<SmoothFitEntry> entries;
    double max_mismatch = 0.0;
};

/**
 * One-sided x-slopes of V in the cell below the last continuation node and
 * in the cell above the first stopping node, for every slice whose boundary
 * lies strictly inside (1, x_max) with room for both stencils. Slices with
 * t > t_max are skipped.
 */
inline SmoothFitReport check_smooth_fit(const ValueSurfaces& s, const Boundary& b,
                                        double t_max = std::numeric_limits<double>::infinity()) {
    const Grid& g = s.grid();
    SmoothFitReport r;
    for (std::size_t n = 0; n < g.n_t(); ++n) {
        if (g.t(n) > t_max + 1e-12) continue;
        for (std::size_t j = 0; j < g.regimes(); ++j) {
            const std::size_t k = b.first_stop_node(n, j);
            if (k < 2 || k + 2 > g.n_x()) continue;
            const auto V = s.V.slice(n, j);
            SmoothFitEntry e{n, j, b.raw(n, j)};
            e.slope_below = (V[k - 1] - V[k - 2]) / (g.x(k - 1) - g.x(k - 2));
            e.slope_above = (V[k + 1] - V[k]) / (g.x(k + 1) - g.x(k));
            e.mismatch = std::abs(e.slope_above - e.slope_below);
            r.max_mismatch = std::max(r.max_mismatch, e.mismatch);
            r.entries.push_back(e);
        }
    }
    return r;
}

/// Boundary CSV: t,j,b_raw,b_smoothed,is_sentinel (sentinel levels print as inf).
inline void write_boundary_csv(const Boundary& b, std::ostream& os) {
    const Grid& g = b.grid();
    const auto precision = os.precision(12);
    os << "t,j,b_raw,b_smoothed,is_sentinel\n";
    for (std::size_t n = 0; n <= g.n_t(); ++n)
        for (std::size_t j = 0; j < g.regimes(); ++j)
            os << g.t(n) << ',' << j + 1 << ',' << b.raw(n, j) << ',' << b.smoothed(n, j) << ','
               << (b.is_sentinel(n, j) ? 1 : 0) << '\n';
    os.precision(precision);
}

}  // namespace ultimax
