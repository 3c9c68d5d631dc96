/**
 * @file markov_chain.hpp
 * @brief Transition kernels and exact path sampling for the regime chain.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ultimax/error.hpp"
#include "ultimax/matrix.hpp"
#include "ultimax/random.hpp"

namespace ultimax {

struct TransitionMatrix {
    SquareMatrix P;
    double dt = 0.0;
};

/// Omitted Poisson tail mass in the uniformization series.
inline constexpr double kUniformizationTail = 1e-14;

namespace detail {

// exp(Q dt) = sum_k Poisson(k; lambda dt) K^k with K = I + Q / lambda.
inline SquareMatrix uniformize(const SquareMatrix& Q, double dt) {
    const std::size_t m = Q.size();
    double lambda = 0.0;
    for (std::size_t i = 0; i < m; ++i) lambda = std::max(lambda, -Q(i, i));
    if (lambda == 0.0 || dt == 0.0) return SquareMatrix::identity(m);

    SquareMatrix K = SquareMatrix::identity(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) K(i, j) += Q(i, j) / lambda;

    const double a = lambda * dt;
    const double log_a = std::log(a);
    SquareMatrix power = SquareMatrix::identity(m);
    SquareMatrix P(m);
    for (std::size_t k = 0;; ++k) {
        const double w = std::exp(-a + static_cast<double>(k) * log_a - std::lgamma(k + 1.0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) P(i, j) += w * power(i, j);
        // Past the mode the omitted weights are bounded by a geometric series with ratio r.
        const double r = a / static_cast<double>(k + 2);
        if (r < 1.0 && w * r / (1.0 - r) < kUniformizationTail) break;
        power = power * K;
    }
    return P;
}

}  // namespace detail

/**
 * P = exp(Q dt) by uniformization. For lambda*dt above 64 the interval is
 * halved until it is not, and the result squared back up, which keeps the
 * leading Poisson weights clear of underflow.
 */
inline TransitionMatrix transition_matrix(const SquareMatrix& Q, double dt) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be >= 0");
    const std::size_t m = Q.size();
    double lambda = 0.0;
    for (std::size_t i = 0; i < m; ++i) lambda = std::max(lambda, -Q(i, i));

    int squarings = 0;
    double h = dt;
    while (lambda * h > 64.0) {
        h *= 0.5;
        ++squarings;
    }
    SquareMatrix P = detail::uniformize(Q, h);
    for (int s = 0; s < squarings; ++s) P = P * P;

    for (std::size_t i = 0; i < m; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            P(i, j) = std::max(0.0, P(i, j));
            row += P(i, j);
        }
        for (std::size_t j = 0; j < m; ++j) P(i, j) /= row;
    }
    return {std::move(P), dt};
}

/// Piecewise-constant regime trajectory on [t0, T].
struct ChainPath {
    std::size_t initial_state = 0;
    std::vector<double> jump_times;    ///< strictly increasing, inside (t0, T]
    std::vector<std::size_t> states;   ///< states[0] = initial_state, states[i+1] after jump i

    std::size_t state_at(double t) const {
        std::size_t i = 0;
        while (i < jump_times.size() && jump_times[i] <= t) ++i;
        return states[i];
    }
};

/**
 * Lazy sojourn sampler. Holding time in j is exponential with rate |q_jj|;
 * the next state is drawn proportionally to the off-diagonal row. Draws
 * are taken from the caller's stream only when a new sojourn starts.
 */
class ChainSampler {
public:
    ChainSampler(const SquareMatrix& Q, double t0, std::size_t j0, RandomStream& rng)
        : Q_(&Q), state_(j0) {
        next_jump_ = t0 + rng.exponential(-Q(j0, j0));
    }

    std::size_t state() const noexcept { return state_; }
    double next_jump() const noexcept { return next_jump_; }

    /// Performs the pending jump and draws the following sojourn.
    void jump(RandomStream& rng) {
        const SquareMatrix& Q = *Q_;
        const std::size_t m = Q.size();
        const double rate = -Q(state_, state_);
        double u = rng.uniform() * rate;
        std::size_t next = state_;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == state_) continue;
            next = i;
            u -= Q(state_, i);
            if (u < 0.0) break;
        }
        state_ = next;
        next_jump_ += rng.exponential(-Q(state_, state_));
    }

private:
    const SquareMatrix* Q_;
    std::size_t state_;
    double next_jump_;
};

inline ChainPath sample_chain(const SquareMatrix& Q, double t0, double T, std::size_t j0,
                              RandomStream& rng) {
    if (!(t0 <= T)) throw Error(ErrorCode::InvalidArgument, "sample_chain requires t0 <= T");
    if (j0 >= Q.size()) throw Error(ErrorCode::InvalidArgument, "initial regime out of range");
    ChainPath path;
    path.initial_state = j0;
    path.states.push_back(j0);
    ChainSampler sampler(Q, t0, j0, rng);
    while (sampler.next_jump() <= T) {
        path.jump_times.push_back(sampler.next_jump());
        sampler.jump(rng);
        path.states.push_back(sampler.state());
    }
    return path;
}

inline ChainPath sample_chain(const SquareMatrix& Q, double t0, double T, std::size_t j0,
                              std::uint64_t seed) {
    RandomStream rng(seed);
    return sample_chain(Q, t0, T, j0, rng);
}

}  // namespace ultimax
