/**
 * @file grid.hpp
 * @brief Log-space discretization of [0,T] x [1, x_max] x regimes, and the
 * surfaces (G, V, F, LG, dG/dx, LV) stored on it.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "ultimax/error.hpp"
#include "ultimax/model.hpp"

namespace ultimax {

inline constexpr std::size_t kDefaultSpaceNodes = 400;
inline constexpr std::size_t kDefaultTimeStepsPerUnitHorizon = 200;

/// Truncation level z_max = log x_max. Four standard deviations of the most
/// volatile regime, plus the worst upward log-drift, plus log 2.
inline double default_z_max(const ValidatedModel& model) {
    double sigma_max = 0.0;
    double drift_max = 0.0;
    for (std::size_t j = 0; j < model.regimes(); ++j) {
        sigma_max = std::max(sigma_max, model.sigma(j));
        drift_max = std::max(drift_max, model.mu(j) - 0.5 * model.variance(j));
    }
    const double T = model.horizon();
    return 4.0 * sigma_max * std::sqrt(T) + std::max(0.0, drift_max) * T + std::log(2.0);
}

/// Uniform nodes z_k = k dz on [0, z_max] (x = e^z) and t_n = n dt on [0, T].
class Grid {
public:
    Grid(double T, std::size_t regimes, std::size_t n_x, std::size_t n_t, double z_max)
        : T_(T), m_(regimes), n_x_(n_x), n_t_(n_t), z_max_(z_max) {
        if (n_x < 3) throw Error(ErrorCode::InvalidArgument, "grid needs at least 3 space nodes");
        if (n_t < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least 1 time step");
        if (!(z_max > 0.0) || !std::isfinite(z_max))
            throw Error(ErrorCode::InvalidArgument, "z_max must be positive");
        if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid horizon must be positive");
        if (regimes == 0) throw Error(ErrorCode::InvalidArgument, "grid needs a regime");
    }

    double horizon() const noexcept { return T_; }
    std::size_t regimes() const noexcept { return m_; }
    std::size_t n_x() const noexcept { return n_x_; }
    std::size_t n_t() const noexcept { return n_t_; }  ///< number of time steps; n_t + 1 slices
    double z_max() const noexcept { return z_max_; }
    double x_max() const noexcept { return std::exp(z_max_); }
    double dz() const noexcept { return z_max_ / static_cast<double>(n_x_ - 1); }
    double dt() const noexcept { return T_ / static_cast<double>(n_t_); }

    double z(std::size_t k) const noexcept { return k == n_x_ - 1 ? z_max_ : dz() * static_cast<double>(k); }
    double x(std::size_t k) const noexcept { return std::exp(z(k)); }
    double t(std::size_t n) const noexcept { return n == n_t_ ? T_ : dt() * static_cast<double>(n); }

    /// Local spacing in x above node k: x_{k+1} - x_k.
    double dx_at(std::size_t k) const noexcept {
        return k + 1 < n_x_ ? x(k + 1) - x(k) : x(k) - x(k - 1);
    }

    /// Local x-spacing at an arbitrary level x >= 1.
    double dx_near(double level) const noexcept { return level * std::expm1(dz()); }

    bool operator==(const Grid&) const = default;

private:
    double T_;
    std::size_t m_;
    std::size_t n_x_;
    std::size_t n_t_;
    double z_max_;
};

inline Grid make_grid(const ValidatedModel& model, std::size_t n_x = kDefaultSpaceNodes,
                      std::size_t n_t = 0, std::optional<double> z_max = std::nullopt) {
    if (n_t == 0) {
        const double units = std::max(1.0, std::ceil(model.horizon()));
        n_t = static_cast<std::size_t>(units) * kDefaultTimeStepsPerUnitHorizon;
    }
    return Grid(model.horizon(), model.regimes(), n_x, n_t, z_max.value_or(default_z_max(model)));
}

enum class Field { G, V, F, LG, dGdx, LV };

constexpr std::string_view to_string(Field f) noexcept {
    switch (f) {
    case Field::G: return "G";
    case Field::V: return "V";
    case Field::F: return "F";
    case Field::LG: return "LG";
    case Field::dGdx: return "dGdx";
    case Field::LV: return "LV";
    }
    return "?";
}

/// Scalar field on (t-slice, regime, z-node); each (n, j) slice is contiguous in z.
class Surface {
public:
    Surface(Field field, const Grid& grid)
        : field_(field), grid_(grid),
          values_((grid.n_t() + 1) * grid.regimes() * grid.n_x(), 0.0) {}

    Field field() const noexcept { return field_; }
    const Grid& grid() const noexcept { return grid_; }

    double& operator()(std::size_t n, std::size_t k, std::size_t j) { return values_[offset(n, j) + k]; }
    double operator()(std::size_t n, std::size_t k, std::size_t j) const { return values_[offset(n, j) + k]; }

    std::span<double> slice(std::size_t n, std::size_t j) {
        return {values_.data() + offset(n, j), grid_.n_x()};
    }
    std::span<const double> slice(std::size_t n, std::size_t j) const {
        return {values_.data() + offset(n, j), grid_.n_x()};
    }

    const std::vector<double>& values() const noexcept { return values_; }

    /// Bilinear interpolation in (t, z) for regime j; z is clamped to the grid.
    double interpolate(double t, double z, std::size_t j) const {
        const double ft = std::clamp(t / grid_.dt(), 0.0, static_cast<double>(grid_.n_t()));
        const double fz = std::clamp(z / grid_.dz(), 0.0, static_cast<double>(grid_.n_x() - 1));
        const std::size_t n0 = std::min(static_cast<std::size_t>(ft), grid_.n_t() - 1);
        const std::size_t k0 = std::min(static_cast<std::size_t>(fz), grid_.n_x() - 2);
        const double wt = ft - static_cast<double>(n0);
        const double wz = fz - static_cast<double>(k0);
        const auto& s = *this;
        const double lo = (1.0 - wz) * s(n0, k0, j) + wz * s(n0, k0 + 1, j);
        const double hi = (1.0 - wz) * s(n0 + 1, k0, j) + wz * s(n0 + 1, k0 + 1, j);
        return (1.0 - wt) * lo + wt * hi;
    }

private:
    std::size_t offset(std::size_t n, std::size_t j) const noexcept {
        return (n * grid_.regimes() + j) * grid_.n_x();
    }

    Field field_;
    Grid grid_;
    std::vector<double> values_;
};

/// Surface CSV: t,x,j,value with one-based regimes and 12 significant digits.
inline void write_surface_csv(const Surface& s, std::ostream& os) {
    const Grid& g = s.grid();
    const auto precision = os.precision(12);
    os << "t,x,j,value\n";
    for (std::size_t n = 0; n <= g.n_t(); ++n)
        for (std::size_t j = 0; j < g.regimes(); ++j)
            for (std::size_t k = 0; k < g.n_x(); ++k)
                os << g.t(n) << ',' << g.x(k) << ',' << j + 1 << ',' << s(n, k, j) << '\n';
    os.precision(precision);
}

}  // namespace ultimax
