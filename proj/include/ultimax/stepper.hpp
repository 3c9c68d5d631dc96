/**
 * @file stepper.hpp
 * @brief Backward time stepping shared by the gain and value solvers.
 *
 * Per regime j the spatial operator is
 *
 *     A_j f = c_j x f_x + d_j x^2 f_xx + r_j f
 *
 * discretized on the log-spaced nodes with three-point stencils in x. The
 * stencils are exact on functions linear in x and have constant
 * coefficients because the nodes are uniform in z = log x.
 *
 * Boundary rows:
 *  - x = 1: reflecting, f_z = 0 via the mirror node f_{-1} = f_1.
 *  - x = x_max: either outflow (f_xx = 0 with an upwind one-sided x f_x,
 *    admissible when c_j <= 0) or a Dirichlet value supplied per step.
 *
 * One step solves (I - dt A_j) u_j = v_j + dt sum_i q_ji v_i: implicit in
 * the drift/diffusion, explicit in the regime coupling. With the guard
 * dt max|q_jj| <= 0.5 both factors are monotone.
 *
 * The payoff x has a kink against the reflecting edge at maturity, so the
 * last interval [t_{N-1}, T] is covered by kTerminalSubsteps smaller steps.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "ultimax/error.hpp"
#include "ultimax/grid.hpp"
#include "ultimax/model.hpp"

namespace ultimax {

/// Largest admissible dt * max|q_jj| for the explicit regime coupling.
inline constexpr double kMaxCouplingStep = 0.5;

/// Steps used on the interval next to maturity.
inline constexpr std::size_t kTerminalSubsteps = 8;

/// One vector of n_x values per regime.
using Slices = std::vector<std::vector<double>>;

enum class TopCondition { Outflow, Dirichlet };

struct OperatorCoefficients {
    double drift = 0.0;      ///< c: multiplies x d/dx
    double diffusion = 0.0;  ///< d: multiplies x^2 d^2/dx^2
    double reaction = 0.0;   ///< r: multiplies f
    TopCondition top = TopCondition::Outflow;
};

/// Stencil weights of A on one regime: A f_k = lower f_{k-1} + diag f_k + upper f_{k+1}.
class SpatialOperator {
public:
    SpatialOperator(const Grid& grid, const OperatorCoefficients& c) : n_(grid.n_x()), coef_(c) {
        const double h = grid.dz();
        const double s = 2.0 * std::sinh(h);
        const double ep = std::expm1(h);
        const double em = -std::expm1(-h);
        lower_ = -c.drift / s + 2.0 * c.diffusion / (s * em);
        upper_ = c.drift / s + 2.0 * c.diffusion / (s * ep);
        diag_ = -2.0 * c.diffusion / (s * ep) - 2.0 * c.diffusion / (s * em) + c.reaction;
        upper0_ = 2.0 * c.diffusion / s * (1.0 / ep + 1.0 / em);
        diag0_ = -upper0_ + c.reaction;
        lower_top_ = -c.drift / em;
        diag_top_ = c.drift / em + c.reaction;
    }

    std::size_t size() const noexcept { return n_; }
    const OperatorCoefficients& coefficients() const noexcept { return coef_; }

    double lower(std::size_t k) const noexcept { return k == 0 ? 0.0 : (k == n_ - 1 ? lower_top_ : lower_); }
    double diag(std::size_t k) const noexcept { return k == 0 ? diag0_ : (k == n_ - 1 ? diag_top_ : diag_); }
    double upper(std::size_t k) const noexcept { return k == 0 ? upper0_ : (k == n_ - 1 ? 0.0 : upper_); }

    /// (A f)_k using the outflow top row regardless of coef.top.
    double apply_at(std::span<const double> f, std::size_t k) const noexcept {
        double out = diag(k) * f[k];
        if (k > 0) out += lower(k) * f[k - 1];
        if (k + 1 < n_) out += upper(k) * f[k + 1];
        return out;
    }

private:
    std::size_t n_;
    OperatorCoefficients coef_;
    double lower_, diag_, upper_;
    double upper0_, diag0_;
    double lower_top_, diag_top_;
};

/// x f_x on the nodes: central inside, zero at x = 1, backward at x_max.
inline void x_derivative(const Grid& grid, std::span<const double> f, std::span<double> out) {
    const std::size_t n = grid.n_x();
    const double h = grid.dz();
    const double s = 2.0 * std::sinh(h);
    const double em = -std::expm1(-h);
    out[0] = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) out[k] = (f[k + 1] - f[k - 1]) / s;
    out[n - 1] = (f[n - 1] - f[n - 2]) / em;
}

/// Factorized (I - dt A) for one regime (Thomas algorithm).
class ImplicitSystem {
public:
    ImplicitSystem(const SpatialOperator& op, double dt) : n_(op.size()), dirichlet_top_(op.coefficients().top == TopCondition::Dirichlet) {
        sub_.resize(n_);
        cprime_.resize(n_);
        inv_denom_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            double a = -dt * op.lower(k);
            double b = 1.0 - dt * op.diag(k);
            double c = -dt * op.upper(k);
            if (k == n_ - 1 && dirichlet_top_) {
                a = 0.0;
                b = 1.0;
                c = 0.0;
            }
            sub_[k] = a;
            const double denom = b - (k > 0 ? a * cprime_[k - 1] : 0.0);
            inv_denom_[k] = 1.0 / denom;
            cprime_[k] = c * inv_denom_[k];
        }
    }

    bool dirichlet_top() const noexcept { return dirichlet_top_; }

    /// Solves in place; rhs.back() must already hold the Dirichlet value if any.
    void solve(std::span<double> rhs) const noexcept {
        rhs[0] *= inv_denom_[0];
        for (std::size_t k = 1; k < n_; ++k) rhs[k] = (rhs[k] - sub_[k] * rhs[k - 1]) * inv_denom_[k];
        for (std::size_t k = n_ - 1; k-- > 0;) rhs[k] -= cprime_[k] * rhs[k + 1];
    }

private:
    std::size_t n_;
    bool dirichlet_top_;
    std::vector<double> sub_, cprime_, inv_denom_;
};

inline void check_coupling_step(const ValidatedModel& model, const Grid& grid) {
    const double coupling = model.max_exit_rate() * grid.dt();
    if (coupling > kMaxCouplingStep) {
        std::ostringstream os;
        os << "max|q_jj| dt = " << coupling << " exceeds " << kMaxCouplingStep << "; use more time steps";
        throw Error(ErrorCode::GridTooCoarse, os.str());
    }
}

/// One backward step for all regimes with explicit Q-coupling.
class BackwardStepper {
public:
    BackwardStepper(const ValidatedModel& model, const Grid& grid,
                    const std::vector<OperatorCoefficients>& coefficients)
        : model_(model), grid_(grid) {
        check_coupling_step(model, grid);
        for (const auto& c : coefficients) {
            operators_.emplace_back(grid, c);
            systems_.emplace_back(operators_.back(), grid.dt());
            fine_systems_.emplace_back(operators_.back(), substep_dt());
        }
    }

    double substep_dt() const noexcept { return grid_.dt() / static_cast<double>(kTerminalSubsteps); }

    const SpatialOperator& op(std::size_t j) const { return operators_[j]; }
    bool dirichlet_top(std::size_t j) const { return systems_[j].dirichlet_top(); }

    /// out(n, ., j) from src(n+1, ., .). top_values[j] is used for Dirichlet regimes.
    void step(const Surface& src, std::size_t n, Surface& out, std::span<const double> top_values) const {
        const std::size_t m = grid_.regimes();
        const std::size_t nx = grid_.n_x();
        const double dt = grid_.dt();
        for (std::size_t j = 0; j < m; ++j) {
            auto u = out.slice(n, j);
            const auto vj = src.slice(n + 1, j);
            for (std::size_t k = 0; k < nx; ++k) u[k] = vj[k];
            for (std::size_t i = 0; i < m; ++i) {
                const double q = model_.q(j, i);
                if (q == 0.0) continue;
                const auto vi = src.slice(n + 1, i);
                for (std::size_t k = 0; k < nx; ++k) u[k] += dt * q * vi[k];
            }
            if (systems_[j].dirichlet_top()) u[nx - 1] = top_values[j];
            systems_[j].solve(u);
        }
    }

    /// In-place step of size substep_dt() on per-regime slices.
    void substep(Slices& v, std::span<const double> top_values) const {
        const std::size_t m = grid_.regimes();
        const std::size_t nx = grid_.n_x();
        const double dt = substep_dt();
        const Slices src = v;
        for (std::size_t j = 0; j < m; ++j) {
            auto& u = v[j];
            for (std::size_t i = 0; i < m; ++i) {
                const double q = model_.q(j, i);
                if (q == 0.0) continue;
                for (std::size_t k = 0; k < nx; ++k) u[k] += dt * q * src[i][k];
            }
            if (fine_systems_[j].dirichlet_top()) u[nx - 1] = top_values[j];
            fine_systems_[j].solve(u);
        }
    }

private:
    ValidatedModel model_;
    Grid grid_;
    std::vector<SpatialOperator> operators_;
    std::vector<ImplicitSystem> systems_;
    std::vector<ImplicitSystem> fine_systems_;
};

}  // namespace ultimax
