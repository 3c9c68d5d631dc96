#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "ultimax/calibration.hpp"
#include "ultimax/gain.hpp"
#include "ultimax/reference_models.hpp"
#include "ultimax/tolerances.hpp"
#include "ultimax/volterra.hpp"

using namespace ultimax;

namespace {

constexpr std::uint64_t kGoldenSeed = 20240601;
// estimate_J(single-regime model, t = 0, x = 1, 10^6 paths, kGoldenSeed).
constexpr double kGoldenJ = 1.28947353655028;
// estimate_K(figure model, t = 0, r = 0.25, x = b(0, 1), regime 1, 10^6 paths, kGoldenSeed), default grid.
constexpr double kGoldenK = 0.0841514420544293;

struct Solved {
    ValidatedModel model;
    ValueSurfaces s;
    Boundary b;
};

Solved solve(const RegimeModel& raw, std::size_t n_t = 0) {
    const auto model = validate(raw);
    const Grid grid = make_grid(model, kDefaultSpaceNodes, n_t);
    auto s = solve_value(model, grid, g_pde(model, grid));
    Boundary b = extract_boundary(s, kTolAbs);
    return {model, std::move(s), std::move(b)};
}

}  // namespace

TEST(EstimateJ, GoldenValue) {
    const auto model = validate(reference::single_regime_model());
    const Estimate e = estimate_J(model, 0.0, 1.0, 0, 1000000, kGoldenSeed);
    EXPECT_NEAR(e.value, kGoldenJ, 1e-12);
}

TEST(EstimateJ, MatchesShiftedGain) {
    // Reversing time and tilting by Y_T^{-1}: E[max(x, M_T)/Y_T] under (mu, sigma)
    // equals e^{(sigma^2 - mu) T} E[max(x, M_T)] under drift mu - sigma^2.
    const double mu = 0.05, sigma = 0.3, T = 1.0;
    const auto model = validate({{mu}, {sigma}, SquareMatrix{{0.0}}, T});
    const auto shifted = validate({{mu - sigma * sigma}, {sigma}, SquareMatrix{{0.0}}, T});
    const Grid g = make_grid(shifted);
    const Surface G = g_pde(shifted, g);
    const double scale = std::exp((sigma * sigma - mu) * T);
    for (double x : {1.0, 1.5, 3.0}) {
        const Estimate J = estimate_J(model, 0.0, x, 0, 400000, 11);
        const double expected = scale * G.interpolate(0.0, std::log(x), 0);
        EXPECT_NEAR(J.value, expected, 3.0 * J.std_error + scale * kGainSchemeTolerance) << "x=" << x;
    }
}

TEST(EstimateJ, LargeXIsInverseMoment) {
    // The maximum never reaches x, so X_T = x / Y_T.
    const auto model = validate(reference::single_regime_model());
    const Estimate J = estimate_J(model, 0.0, 50.0, 0, 200000, 5);
    EXPECT_NEAR(J.value, 50.0 * std::exp(0.09 - 0.05), 3.0 * J.std_error);
}

TEST(EstimateJ, AtHorizonIsX) {
    const auto model = validate(reference::figure_model());
    EXPECT_EQ(estimate_J(model, 0.5, 1.3, 1, 10, 1).value, 1.3);
}

TEST(EstimateK, AtStartIsIntegrand) {
    const auto r = solve(reference::figure_model(), reference::kFigureTimeSteps);
    const VolterraContext ctx(r.s, r.b);
    const double b = r.b.smoothed(20, 0);
    const double t = r.s.grid().t(20);
    std::size_t extrapolated = 0;
    EXPECT_EQ(estimate_K(r.model, ctx, t, t, 0.9 * b + 0.1, 0, 100, 1).value, 0.0);
    const Estimate above = estimate_K(r.model, ctx, t, t, 1.2 * b, 0, 100, 1);
    EXPECT_EQ(above.value, ctx.integrand(t, std::log(1.2 * b), 0, extrapolated));
    EXPECT_EQ(above.std_error, 0.0);
}

TEST(EstimateK, GoldenValue) {
    const auto r = solve(reference::figure_model());
    const VolterraContext ctx(r.s, r.b);
    const Estimate K = estimate_K(r.model, ctx, 0.0, 0.25, r.b.smoothed(0, 0), 0, 1000000, kGoldenSeed);
    EXPECT_NEAR(K.value, kGoldenK, 1e-12);
}

TEST(EstimateK, RejectsReversedTimes) {
    const auto r = solve(reference::figure_model(), 50);
    const VolterraContext ctx(r.s, r.b);
    EXPECT_THROW(estimate_K(r.model, ctx, 0.3, 0.2, 1.5, 0, 10, 1), Error);
}

TEST(VolterraResidual, SingleRegimeSmall) {
    const auto r = solve(reference::single_regime_model());
    const VolterraContext ctx(r.s, r.b);
    const VolterraReport rep = volterra_residual(r.model, ctx, 20000, kDefaultQuadratureNodes, 3, 40);
    ASSERT_GE(rep.rows.size(), 5u);
    EXPECT_LE(rep.median_abs_relative(), kVolterraRelTolerance);
    for (const auto& row : rep.rows) {
        if (row.t == r.model.horizon()) continue;
        EXPECT_LE(std::abs(row.residual.value), 4.0 * row.residual.std_error + 0.01 * row.lhs) << "t=" << row.t;
    }
}

TEST(VolterraResidual, TerminalRowIsExact) {
    const auto r = solve(reference::figure_model(), reference::kFigureTimeSteps);
    const VolterraContext ctx(r.s, r.b);
    const VolterraReport rep = volterra_residual(r.model, ctx, 1000, 16, 3, 50);
    std::size_t terminal = 0;
    for (const auto& row : rep.rows)
        if (row.t == r.model.horizon()) {
            ++terminal;
            EXPECT_EQ(row.residual.value, 0.0);
            EXPECT_EQ(row.relative_residual, 0.0);
            EXPECT_EQ(row.lhs, row.b);
        }
    EXPECT_EQ(terminal, 2u);
}

TEST(VolterraResidual, SkipsSentinelRows) {
    const auto r = solve(reference::maturity_model(), 50);
    const VolterraContext ctx(r.s, r.b);
    const VolterraReport rep = volterra_residual(r.model, ctx, 100, 8, 3, 10);
    EXPECT_EQ(rep.rows.size(), 2u);  // only t = T
}

TEST(VolterraResidual, ThreadCountDoesNotChangeResult) {
    const auto r = solve(reference::figure_model(), reference::kFigureTimeSteps);
    const VolterraContext ctx(r.s, r.b);
    const auto a = volterra_residual(r.model, ctx, 9000, 16, 7, 50, 1);
    const auto b = volterra_residual(r.model, ctx, 9000, 16, 7, 50, 3);
    std::ostringstream sa, sb;
    write_volterra_csv(a, sa);
    write_volterra_csv(b, sb);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(VolterraResidual, RejectsBadArguments) {
    const auto r = solve(reference::figure_model(), 50);
    const VolterraContext ctx(r.s, r.b);
    EXPECT_THROW(volterra_residual(r.model, ctx, 100, 1, 3), Error);
    EXPECT_THROW(volterra_residual(r.model, ctx, 1, 8, 3), Error);
    EXPECT_THROW(volterra_residual(r.model, ctx, 100, 8, 3, 0), Error);
}

TEST(VolterraCsv, Header) {
    VolterraReport rep;
    std::ostringstream os;
    write_volterra_csv(rep, os);
    EXPECT_EQ(os.str(), "t,j,lhs,J,J_se,K_integral,K_se,residual,relative_residual\n");
}

TEST(VolterraResidual, RefinementReducesMedian) {
    // Doubling paths and quadrature nodes and halving both grid spacings; rows stay at the same t.
    const auto model = validate(reference::figure_model());
    const Grid coarse = make_grid(model, kDefaultSpaceNodes, reference::kFigureTimeSteps);
    const auto median = [&](const Grid& g, std::size_t n_paths, std::size_t n_quad, std::size_t stride) {
        const auto s = solve_value(model, g, g_pde(model, g));
        const Boundary b = extract_boundary(s, kTolAbs);
        const VolterraContext ctx(s, b);
        return volterra_residual(model, ctx, n_paths, n_quad, kGoldenSeed, stride).median_abs_relative();
    };
    const double before = median(coarse, 200000, 32, 10);
    const double after = median(refined_grid(coarse), 400000, 64, 20);
    EXPECT_LE(after, 0.7 * before) << "median " << before << " -> " << after;
}
