#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "ultimax/boundary.hpp"
#include "ultimax/calibration.hpp"
#include "ultimax/gain.hpp"
#include "ultimax/reference_models.hpp"
#include "ultimax/tolerances.hpp"

using namespace ultimax;

namespace {

struct Solved {
    ValidatedModel model;
    Grid grid;
    ValueSurfaces s;
    Boundary b;
};

Solved solve(const RegimeModel& raw, std::size_t n_t = 0) {
    const auto model = validate(raw);
    const Grid grid = make_grid(model, kDefaultSpaceNodes, n_t);
    auto s = solve_value(model, grid, g_pde(model, grid));
    Boundary b = extract_boundary(s, kTolAbs);
    return {model, grid, std::move(s), std::move(b)};
}

}  // namespace

TEST(ExtractBoundary, ImmediateModelStopsAtOne) {
    const auto r = solve(reference::immediate_model());
    for (std::size_t n = 0; n <= r.grid.n_t(); ++n)
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_EQ(r.b.first_stop_node(n, j), 0u);
            EXPECT_EQ(r.b.raw(n, j), 1.0);
        }
}

TEST(ExtractBoundary, MaturityModelNeverStopsEarly) {
    const auto r = solve(reference::maturity_model());
    for (std::size_t n = 0; n < r.grid.n_t(); ++n)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_TRUE(r.b.is_sentinel(n, j)) << "n=" << n;
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(r.b.raw(r.grid.n_t(), j), 1.0);
}

TEST(ExtractBoundary, FigureModelTerminalLevel) {
    const auto r = solve(reference::figure_model(), reference::kFigureTimeSteps);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(r.b.raw(r.grid.n_t(), j), 1.0, r.grid.dx_near(1.0));
}

TEST(ExtractBoundary, FigureModelHasInteriorBoundary) {
    const auto r = solve(reference::figure_model(), reference::kFigureTimeSteps);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_FALSE(r.b.is_sentinel(0, j));
        EXPECT_GT(r.b.raw(0, j), 1.2);
        EXPECT_LT(r.b.raw(0, j), 0.5 * r.grid.x_max());
    }
}

TEST(ExtractBoundary, LevelIsInsideStoppingCell) {
    const auto r = solve(reference::figure_model());
    for (std::size_t n = 0; n < r.grid.n_t(); n += 7)
        for (std::size_t j = 0; j < 2; ++j) {
            const std::size_t k = r.b.first_stop_node(n, j);
            ASSERT_GE(k, 1u);
            EXPECT_LE(r.b.raw(n, j), r.grid.x(k));
            EXPECT_GE(r.b.raw(n, j), r.grid.x(k - 1));
        }
}

TEST(ExtractBoundary, StrayStoppingNodeIsReported) {
    auto r = solve(reference::figure_model(), 50);
    const std::size_t k = r.b.first_stop_node(10, 0);
    ASSERT_GT(k, 10u);
    r.s.F(10, 2, 0) = 0.0;
    try {
        extract_boundary(r.s, kTolAbs);
        FAIL() << "expected NonMonotoneSlice";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonMonotoneSlice);
    }
}

TEST(ExtractBoundary, StoppingNodeNextToRunIsTolerated) {
    auto r = solve(reference::figure_model(), 50);
    const std::size_t k = r.b.first_stop_node(10, 0);
    r.s.F(10, k - 2, 0) = 0.0;
    EXPECT_NO_THROW(extract_boundary(r.s, kTolAbs));
}

TEST(BoundaryMonotone, FigureModel) {
    const auto r = solve(reference::figure_model(), reference::kFigureTimeSteps);
    const auto m = check_boundary_monotone(r.b, r.model);
    EXPECT_EQ(m.violations, 0u) << "max violation " << m.max_violation;
    EXPECT_LE(m.continuity_constant, kContinuityConstant);
}

TEST(BoundaryMonotone, DefaultGrid) {
    const auto r = solve(reference::figure_model());
    EXPECT_EQ(check_boundary_monotone(r.b, r.model).violations, 0u);
}

TEST(BoundaryMonotone, NegativeDriftIsNotApplicable) {
    const auto r = solve({{0.15, -0.05}, {0.5, 0.3}, reference::two_state_generator(), 0.5}, 50);
    try {
        check_boundary_monotone(r.b, r.model);
        FAIL() << "expected NotApplicable";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotApplicable);
    }
}

TEST(BoundaryOrder, CountsCrossings) {
    const Grid g(1.0, 2, 51, 4, 1.0);
    Boundary b(g, kTolAbs);
    for (std::size_t n = 0; n <= 4; ++n) {
        b.raw_ref(n, 0) = 1.5;
        b.raw_ref(n, 1) = n < 2 ? 1.2 : 1.5;
    }
    EXPECT_EQ(count_order_violations(b, 0, 1), 2u);
    EXPECT_EQ(count_order_violations(b, 1, 0), 0u);
}

TEST(SmoothFit, MismatchOfOrderDx) {
    const auto r = solve(reference::figure_model());
    const auto fit = check_smooth_fit(r.s, r.b, 0.5 * r.model.horizon());
    ASSERT_FALSE(fit.entries.empty());
    for (const auto& e : fit.entries)
        EXPECT_LE(e.mismatch, kSmoothFitConstant * r.grid.dx_near(e.level)) << "n=" << e.n << " j=" << e.j;
}

TEST(SmoothFit, MismatchShrinksWithSpacing) {
    const auto model = validate(reference::figure_model());
    const Grid coarse = make_grid(model);
    const auto mismatch = [&](const Grid& g) {
        const auto s = solve_value(model, g, g_pde(model, g));
        return check_smooth_fit(s, extract_boundary(s, kTolAbs)).max_mismatch;
    };
    EXPECT_GE(mismatch(coarse) / mismatch(refined_in_space(coarse)), kHalvingFactor);
}

TEST(SmoothFit, SlopeAboveMatchesGainDerivative) {
    // On the stopping set V = G, so the slope above b is dG/dx = P(max ratio < x).
    const auto r = solve(reference::single_regime_model());
    const auto d = dG_dx(r.s.G).values;
    const auto fit = check_smooth_fit(r.s, r.b);
    ASSERT_FALSE(fit.entries.empty());
    for (const auto& e : fit.entries) {
        const std::size_t k = r.b.first_stop_node(e.n, e.j);
        // Forward difference: compare with the derivative at the cell midpoint.
        const double mid = 0.5 * (d(e.n, k, e.j) + d(e.n, k + 1, e.j));
        EXPECT_NEAR(e.slope_above, mid, 2.0 * r.grid.dx_near(r.grid.x(k))) << "n=" << e.n;
    }
}

TEST(SmoothedBoundary, MedianOfThree) {
    const Grid g(1.0, 1, 51, 4, 1.0);
    Boundary b(g, kTolAbs);
    const double raw[] = {2.0, 1.9, 2.5, 1.7, 1.0};
    for (std::size_t n = 0; n <= 4; ++n) b.raw_ref(n, 0) = raw[n];
    smooth_boundary(b);
    EXPECT_EQ(b.smoothed(0, 0), 2.0);
    EXPECT_EQ(b.smoothed(1, 0), 2.0);
    EXPECT_EQ(b.smoothed(2, 0), 1.9);
    EXPECT_EQ(b.smoothed(3, 0), 1.7);
    EXPECT_EQ(b.smoothed(4, 0), 1.0);
    EXPECT_DOUBLE_EQ(b.smoothed_at(0.125, 0), 2.0);
    EXPECT_DOUBLE_EQ(b.smoothed_at(0.625, 0), 1.8);
    EXPECT_EQ(b.level_before(0.74, 0), 2.5);
    EXPECT_EQ(b.level_before(0.75, 0), 1.7);
}

TEST(BoundaryCsv, HeaderAndSentinel) {
    const auto r = solve(reference::maturity_model(), 10);
    std::ostringstream os;
    write_boundary_csv(r.b, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,j,b_raw,b_smoothed,is_sentinel");
    std::getline(is, line);
    EXPECT_EQ(line, "0,1,inf,inf,1");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 21u);
}
