/**
 * @file calibration.hpp
 * @brief Grid-refinement estimates behind the pinned tolerances.
 *
 * A scheme tolerance is 2 max |f_fine - f_coarse| over the probe points,
 * where the fine grid halves both dz and dt on the same domain.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ultimax/gain.hpp"
#include "ultimax/grid.hpp"
#include "ultimax/model.hpp"
#include "ultimax/value.hpp"

namespace ultimax {

struct ProbePoint {
    double t;
    double x;
    std::size_t j;
};

/// t in {0, T/4, T/2} times x in {1, 1.5, 3}, in every regime.
inline std::vector<ProbePoint> probe_points(const ValidatedModel& model) {
    std::vector<ProbePoint> out;
    const double T = model.horizon();
    for (double t : {0.0, 0.25 * T, 0.5 * T})
        for (double x : {1.0, 1.5, 3.0})
            for (std::size_t j = 0; j < model.regimes(); ++j) out.push_back({t, x, j});
    return out;
}

/// Same domain with every cell split in two.
inline Grid refined_grid(const Grid& g) {
    return Grid(g.horizon(), g.regimes(), 2 * g.n_x() - 1, 2 * g.n_t(), g.z_max());
}

/// Same time grid with every space cell split in two.
inline Grid refined_in_space(const Grid& g) {
    return Grid(g.horizon(), g.regimes(), 2 * g.n_x() - 1, g.n_t(), g.z_max());
}

struct SchemeTolerance {
    double gain = 0.0;   ///< for G
    double value = 0.0;  ///< for V
};

inline SchemeTolerance scheme_tolerance(const ValidatedModel& model, const Grid& coarse) {
    const Grid fine = refined_grid(coarse);
    const Surface Gc = g_pde(model, coarse);
    const Surface Gf = g_pde(model, fine);
    const ValueSurfaces Vc = solve_value(model, coarse, Gc);
    const ValueSurfaces Vf = solve_value(model, fine, Gf);
    SchemeTolerance tol;
    for (const auto& p : probe_points(model)) {
        const double z = std::log(p.x);
        tol.gain = std::max(tol.gain, 2.0 * std::abs(Gf.interpolate(p.t, z, p.j) - Gc.interpolate(p.t, z, p.j)));
        tol.value = std::max(tol.value, 2.0 * std::abs(Vf.V.interpolate(p.t, z, p.j) - Vc.V.interpolate(p.t, z, p.j)));
    }
    return tol;
}

}  // namespace ultimax
