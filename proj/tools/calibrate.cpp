// Prints the grid-refinement figures that the constants in tolerances.hpp are pinned from.
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "ultimax/boundary.hpp"
#include "ultimax/calibration.hpp"
#include "ultimax/reference_models.hpp"

using namespace ultimax;

int main() {
    const std::vector<std::pair<std::string, RegimeModel>> models{
        {"figure", reference::figure_model()},     {"immediate", reference::immediate_model()},
        {"maturity", reference::maturity_model()}, {"zero_drift", reference::zero_drift_model()},
        {"single", reference::single_regime_model()}};
    double gain = 0.0, value = 0.0;
    for (const auto& [name, raw] : models) {
        const auto model = validate(raw);
        const auto tol = scheme_tolerance(model, make_grid(model));
        std::printf("%-10s scheme tolerance G %.3e V %.3e\n", name.c_str(), tol.gain, tol.value);
        gain = std::max(gain, tol.gain);
        value = std::max(value, tol.value);
    }
    std::printf("max        scheme tolerance G %.3e V %.3e\n", gain, value);

    const auto figure = validate(reference::figure_model());
    Grid grid = make_grid(figure);
    for (int level = 0; level < 3; ++level) {
        const auto s = solve_value(figure, grid, g_pde(figure, grid));
        const auto nr = check_normal_reflection(s);
        const auto b = extract_boundary(s, 1e-9);
        const auto mono = check_boundary_monotone(b, figure);
        const auto fit = check_smooth_fit(s, b);
        std::printf("n_x %4zu  normal reflection C %.2f  continuity C %.3f  smooth fit %.4f\n", grid.n_x(),
                    nr.constant(), mono.continuity_constant, fit.max_mismatch);
        grid = refined_in_space(grid);
    }

    const auto maturity = validate(reference::maturity_model());
    const Grid mg = make_grid(maturity);
    const auto ms = solve_value(maturity, mg, g_pde(maturity, mg));
    const double dx = mg.x(1) - mg.x(0);
    double min_gap = INFINITY;
    for (std::size_t n = 0; n + 5 <= mg.n_t(); ++n)
        for (std::size_t j = 0; j < mg.regimes(); ++j)
            for (std::size_t k = 0; k < mg.n_x(); ++k)
                if (mg.x(k) >= 1.0 + 5.0 * dx && mg.x(k) <= 0.5 * mg.x_max()) min_gap = std::min(min_gap, -ms.F(n, k, j));
    std::printf("maturity model min -F on the checked region %.3e\n", min_gap);
}
