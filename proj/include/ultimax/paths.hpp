/**
 * @file paths.hpp
 * @brief Joint simulation of the regime chain, the asset and its running maximum.
 *
 * Y is normalized to 1 at the start time. Regime jumps are merged into the
 * step grid so that each sub-interval has one frozen regime, over which the
 * GBM update is exact. With MaxMonitoring::BrownianBridge the maximum of the
 * log-price bridge is also sampled exactly on every sub-interval, making the
 * recorded running maximum the continuous-time one.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "ultimax/error.hpp"
#include "ultimax/markov_chain.hpp"
#include "ultimax/model.hpp"
#include "ultimax/parallel.hpp"
#include "ultimax/random.hpp"

namespace ultimax {

enum class MaxMonitoring {
    Discrete,        ///< max over merged grid/jump times only; biased low by O(sqrt(dt))
    BrownianBridge,  ///< exact intra-interval maximum
};

/// One simulated path sampled on the step grid (n_steps + 1 points).
struct SinglePath {
    std::vector<std::size_t> states;
    std::vector<double> y;
    std::vector<double> ymax;
};

/// Switch to a fresh stream once the values at `after_step` are produced.
struct TailReseed {
    std::size_t after_step = 0;
    std::uint64_t seed = 0;
};

/// X_s = max(x0 * Y_t, running max) / Y_s.
inline double ratio_process(double x0, double y_start, double ymax, double y) noexcept {
    return std::max(x0 * y_start, ymax) / y;
}

class PathSimulator {
public:
    PathSimulator(const ValidatedModel& model, std::vector<double> times, std::size_t j0,
                  MaxMonitoring monitoring = MaxMonitoring::Discrete)
        : model_(model), times_(std::move(times)), j0_(j0), monitoring_(monitoring) {
        if (times_.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least one step");
        if (j0 >= model.regimes()) throw Error(ErrorCode::InvalidArgument, "initial regime out of range");
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (!(times_[k] > times_[k - 1]))
                throw Error(ErrorCode::InvalidArgument, "step times must be increasing");
        drift_.resize(model.regimes());
        for (std::size_t j = 0; j < model.regimes(); ++j)
            drift_[j] = model.mu(j) - 0.5 * model.variance(j);
    }

    /// Uniform grid of n_steps steps on [t0, T].
    PathSimulator(const ValidatedModel& model, double t0, std::size_t j0, std::size_t n_steps,
                  MaxMonitoring monitoring = MaxMonitoring::Discrete)
        : PathSimulator(model, uniform_times(t0, model.horizon(), n_steps), j0, monitoring) {}

    static std::vector<double> uniform_times(double t0, double T, std::size_t n_steps) {
        if (!(t0 < T)) throw Error(ErrorCode::InvalidArgument, "path start must be before T");
        if (n_steps == 0) throw Error(ErrorCode::InvalidArgument, "n_steps must be >= 1");
        std::vector<double> t(n_steps + 1);
        for (std::size_t k = 0; k <= n_steps; ++k)
            t[k] = t0 + (T - t0) * static_cast<double>(k) / static_cast<double>(n_steps);
        t.back() = T;
        return t;
    }

    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t n_steps() const noexcept { return times_.size() - 1; }
    std::size_t initial_regime() const noexcept { return j0_; }
    MaxMonitoring monitoring() const noexcept { return monitoring_; }

    void simulate(std::uint64_t seed, SinglePath& out,
                  std::optional<TailReseed> tail = std::nullopt) const {
        const std::size_t n = n_steps();
        out.states.resize(n + 1);
        out.y.resize(n + 1);
        out.ymax.resize(n + 1);
        walk(seed, [&](std::size_t k, std::size_t state, double log_y, double log_max) {
            out.states[k] = state;
            out.y[k] = std::exp(log_y);
            out.ymax[k] = std::exp(log_max);
        }, tail);
    }

    /// Calls visit(k, regime, log Y, log running max) for k = 0..n_steps, with Y = 1 at k = 0.
    template <typename Visit>
    void walk(std::uint64_t seed, Visit&& visit, std::optional<TailReseed> tail = std::nullopt) const {
        const std::size_t n = n_steps();
        RandomStream rng(seed);
        ChainSampler chain(model_.generator(), times_[0], j0_, rng);
        double log_y = 0.0;
        double log_max = 0.0;
        visit(std::size_t{0}, j0_, log_y, log_max);

        for (std::size_t k = 0; k < n; ++k) {
            if (tail && tail->after_step == k) rng = RandomStream(tail->seed);
            double t = times_[k];
            const double t_end = times_[k + 1];
            while (t < t_end) {
                const bool jumps = chain.next_jump() <= t_end;
                const double seg_end = jumps ? chain.next_jump() : t_end;
                const double dt = seg_end - t;
                if (dt > 0.0) {
                    const std::size_t j = chain.state();
                    const double sd = model_.sigma(j) * std::sqrt(dt);
                    const double inc = drift_[j] * dt + sd * rng.normal();
                    if (monitoring_ == MaxMonitoring::BrownianBridge) {
                        const double e = -std::log(rng.uniform());
                        const double bridge_max =
                            0.5 * (2.0 * log_y + inc + std::sqrt(inc * inc + 2.0 * sd * sd * e));
                        log_max = std::max(log_max, bridge_max);
                    }
                    log_y += inc;
                    log_max = std::max(log_max, log_y);
                }
                t = seg_end;
                if (jumps) chain.jump(rng);
            }
            visit(k + 1, chain.state(), log_y, log_max);
        }
    }

private:
    ValidatedModel model_;
    std::vector<double> times_;
    std::size_t j0_;
    MaxMonitoring monitoring_;
    std::vector<double> drift_;  // log-drift mu - sigma^2 / 2
};

/// Per-path seed for path `index` under `root`.
inline std::uint64_t path_seed(std::uint64_t root, std::size_t index) noexcept {
    return derive_seed(root, index);
}

struct PathBundle {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> times;
    std::vector<std::size_t> states;  ///< n_paths x (n_steps + 1), path-major
    std::vector<double> y;
    std::vector<double> ymax;
    std::uint64_t seed = 0;

    std::size_t index(std::size_t path, std::size_t step) const noexcept {
        return path * (n_steps + 1) + step;
    }
};

inline PathBundle simulate_paths(const ValidatedModel& model, double t0, std::size_t j0,
                                 std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                 MaxMonitoring monitoring = MaxMonitoring::Discrete,
                                 std::size_t threads = default_threads()) {
    const PathSimulator sim(model, t0, j0, n_steps, monitoring);
    PathBundle bundle;
    bundle.n_paths = n_paths;
    bundle.n_steps = n_steps;
    bundle.times = sim.times();
    bundle.seed = seed;
    const std::size_t width = n_steps + 1;
    bundle.states.resize(n_paths * width);
    bundle.y.resize(n_paths * width);
    bundle.ymax.resize(n_paths * width);

    struct Scratch {};
    parallel_reduce<Scratch>(
        n_paths, threads,
        [&](std::size_t begin, std::size_t end, Scratch&) {
            SinglePath path;
            for (std::size_t p = begin; p < end; ++p) {
                sim.simulate(path_seed(seed, p), path);
                std::copy(path.states.begin(), path.states.end(), bundle.states.begin() + p * width);
                std::copy(path.y.begin(), path.y.end(), bundle.y.begin() + p * width);
                std::copy(path.ymax.begin(), path.ymax.end(), bundle.ymax.begin() + p * width);
            }
        },
        [](Scratch&, Scratch&) {});
    return bundle;
}

/// Ratio process X = max(x0 Y_t0, running max) / Y on a bundle, x >= 1.
struct XPath {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::vector<double> x;  ///< same layout as PathBundle::y
};

inline XPath lift_to_x(const PathBundle& bundle, double x0) {
    if (!(x0 >= 1.0)) throw Error(ErrorCode::InvalidArgument, "x0 must be >= 1");
    XPath out{bundle.n_paths, bundle.n_steps, std::vector<double>(bundle.y.size())};
    for (std::size_t p = 0; p < bundle.n_paths; ++p) {
        const double y0 = bundle.y[bundle.index(p, 0)];
        for (std::size_t s = 0; s <= bundle.n_steps; ++s) {
            const std::size_t i = bundle.index(p, s);
            out.x[i] = ratio_process(x0, y0, bundle.ymax[i], bundle.y[i]);
        }
    }
    return out;
}

/// Debug dump: path_id, step, t, state (one-based), y, ymax.
inline void write_paths_csv(const PathBundle& bundle, std::ostream& os) {
    const auto flags = os.flags();
    const auto precision = os.precision();
    os.precision(12);
    os << "path_id,step,t,state,y,ymax\n";
    for (std::size_t p = 0; p < bundle.n_paths; ++p)
        for (std::size_t s = 0; s <= bundle.n_steps; ++s) {
            const std::size_t i = bundle.index(p, s);
            os << p << ',' << s << ',' << bundle.times[s] << ',' << bundle.states[i] + 1 << ','
               << bundle.y[i] << ',' << bundle.ymax[i] << '\n';
        }
    os.flags(flags);
    os.precision(precision);
}

}  // namespace ultimax
