#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ultimax/calibration.hpp"
#include "ultimax/gain.hpp"
#include "ultimax/reference_models.hpp"
#include "ultimax/tolerances.hpp"
#include "ultimax/value.hpp"

using namespace ultimax;

namespace {

ValueSurfaces solve(const ValidatedModel& model, const Grid& grid) { return solve_value(model, grid, g_pde(model, grid)); }

ValueSurfaces solve(const RegimeModel& raw) {
    const auto model = validate(raw);
    return solve(model, make_grid(model));
}

}  // namespace

TEST(SolveValue, TerminalSliceIsX) {
    const auto s = solve(reference::figure_model());
    const Grid& g = s.grid();
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < g.n_x(); k += 37) {
            EXPECT_EQ(s.V(g.n_t(), k, j), g.x(k));
            EXPECT_EQ(s.F(g.n_t(), k, j), 0.0);
        }
}

TEST(SolveValue, NeverAboveGain) {
    const auto s = solve(reference::figure_model());
    for (double f : s.F.values()) EXPECT_LE(f, 0.0);
}

TEST(SolveValue, ValueAtLeastOne) {
    // Selling at the running maximum itself gives ratio 1; V cannot do better.
    const auto s = solve(reference::figure_model());
    for (double v : s.V.values()) EXPECT_GE(v, 1.0 - 1e-12);
}

TEST(SolveValue, ImmediateModelStopsEverywhere) {
    const auto s = solve(reference::immediate_model());
    double worst = 0.0;
    for (std::size_t i = 0; i < s.F.values().size(); ++i)
        worst = std::max(worst, std::abs(s.F.values()[i]) / s.G.values()[i]);
    EXPECT_LE(worst, 1e-3);
}

TEST(SolveValue, MaturityModelContinuesInside) {
    const auto model = validate(reference::maturity_model());
    const Grid g = make_grid(model);
    const auto s = solve(model, g);
    const double x_hi = g.x_max() / 2.0;
    std::size_t checked = 0;
    for (std::size_t n = 0; n + 5 <= g.n_t(); ++n)
        for (std::size_t k = 5; k < g.n_x() && g.x(k) <= x_hi; ++k)
            for (std::size_t j = 0; j < 2; ++j) {
                EXPECT_LT(s.F(n, k, j), -kTolAbs) << "n=" << n << " k=" << k << " j=" << j;
                ++checked;
            }
    EXPECT_GT(checked, 1000u);
}

TEST(SolveValue, RejectsMismatchedGain) {
    const auto model = validate(reference::figure_model());
    const Grid g = make_grid(model, 101, 50);
    const Surface wrong = g_pde(model, make_grid(model, 121, 50));
    EXPECT_THROW(solve_value(model, g, wrong), Error);
}

TEST(SolveValue, CoarseTimeGridIsRejected) {
    // max|q_jj| = 2.5; 0.5 / 2.5 = 0.2 is the largest admissible dt.
    const auto model = validate(reference::figure_model());
    try {
        g_pde(model, make_grid(model, 101, 2));
        FAIL() << "expected GridTooCoarse";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridTooCoarse);
    }
    EXPECT_NO_THROW(g_pde(model, make_grid(model, 101, 3)));
}

TEST(NormalReflection, ImmediateModelSlopeVanishes) {
    const auto s = solve(reference::immediate_model());
    const auto r = check_normal_reflection(s);
    EXPECT_LE(r.constant(), kNormalReflectionConstant);
}

TEST(NormalReflection, FigureModelWithinConstant) {
    const auto s = solve(reference::figure_model());
    const auto r = check_normal_reflection(s);
    EXPECT_EQ(r.slope.size(), s.grid().n_t() * 2);
    EXPECT_LE(r.constant(), kNormalReflectionConstant);
}

TEST(NormalReflection, SlopeShrinksWithSpacing) {
    const auto model = validate(reference::figure_model());
    const Grid coarse = make_grid(model);
    const double a = check_normal_reflection(solve(model, coarse)).max_abs_slope;
    const double b = check_normal_reflection(solve(model, refined_in_space(coarse))).max_abs_slope;
    EXPECT_GE(a / b, kHalvingFactor);
}

TEST(FMonotone, FigureModel) {
    const auto r = check_F_monotone_t(solve(reference::figure_model()), kMonotoneRelTolerance);
    EXPECT_EQ(r.violations, 0u) << "max violation " << r.max_violation;
    EXPECT_GT(r.max_abs_F, 0.0);
}

TEST(FMonotone, ZeroDriftModel) {
    const auto r = check_F_monotone_t(solve(reference::zero_drift_model()), kMonotoneRelTolerance);
    EXPECT_EQ(r.violations, 0u) << "max violation " << r.max_violation;
}

TEST(FMonotone, NegativeDriftIsNotApplicable) {
    const auto model = validate({{0.15, -0.05}, {0.5, 0.3}, reference::two_state_generator(), 0.5});
    const auto s = solve(model, make_grid(model, 101, 50));
    try {
        check_F_monotone_t(s);
        FAIL() << "expected NotApplicable";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotApplicable);
    }
}

TEST(Containment, NoStoppingWhereGeneratorIsNegative) {
    for (const auto& raw : {reference::immediate_model(), reference::maturity_model(), reference::figure_model()}) {
        const auto model = validate(raw);
        const auto s = solve(model, make_grid(model));
        const Surface LG = lg(s.G, dG_dx(s.G).values, model);
        EXPECT_EQ(count_containment_violations(s, LG, kEpsSign, kTolAbs), 0u);
    }
}

TEST(Complementarity, ResidualWithinSchemeTolerance) {
    const auto s = solve(reference::figure_model());
    EXPECT_LE(complementarity_residual(s, lv_surface(s)), kValueSchemeTolerance);
}

TEST(LvSurface, VanishesInContinuationRegion) {
    const auto s = solve(reference::figure_model());
    const Surface LV = lv_surface(s);
    const Grid& g = s.grid();
    double worst = 0.0;
    for (std::size_t n = 0; n < g.n_t(); ++n)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k + 1 < g.n_x(); ++k)
                // The node just below the stopping set sees a projected neighbour.
                if (s.F(n, k, j) < -1e-6 && s.F(n, k + 1, j) < -1e-6) worst = std::max(worst, std::abs(LV(n, k, j)));
    EXPECT_LT(worst, 1e-8);
}

TEST(LvSurface, EqualsLgWhenStoppedAtOnce) {
    // Without continuation V = G, so the discrete generator of V is the G
    // operator residual plus mu G; compare against the pointwise LG.
    const auto model = validate(reference::immediate_model());
    const auto s = solve(model, make_grid(model));
    const Surface LV = lv_surface(s);
    const Surface LG = lg(s.G, dG_dx(s.G).values, model);
    const Grid& g = s.grid();
    for (std::size_t n = 0; n < g.n_t(); n += 20)
        for (std::size_t k = 1; k < g.n_x() - 1; k += 40)
            for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(LV(n, k, j), LG(n, k, j), 0.05 * std::abs(LG(n, k, j)) + 1e-3);
}

TEST(Convergence, JointRefinementHalvesChange) {
    for (const auto& raw : {reference::figure_model(), reference::maturity_model(), reference::single_regime_model()}) {
        const auto model = validate(raw);
        Grid g = make_grid(model);
        std::vector<ValueSurfaces> levels;
        for (int l = 0; l < 3; ++l) {
            levels.push_back(solve(model, g));
            g = refined_grid(g);
        }
        double d1 = 0.0, d2 = 0.0;
        for (const auto& p : probe_points(model)) {
            const double z = std::log(p.x);
            const double a = levels[0].V.interpolate(p.t, z, p.j);
            const double b = levels[1].V.interpolate(p.t, z, p.j);
            const double c = levels[2].V.interpolate(p.t, z, p.j);
            d1 = std::max(d1, std::abs(b - a));
            d2 = std::max(d2, std::abs(c - b));
        }
        EXPECT_GE(d1 / d2, kHalvingFactor) << "changes " << d1 << ", " << d2;
    }
}
