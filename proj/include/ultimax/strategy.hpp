/**
 * @file strategy.hpp
 * @brief Monte Carlo regret E[max_{[0,T]} Y / Y_tau] of stopping policies started at x = 1.
 *
 * Policies observe (X, regime) on the step grid only; the running maximum
 * in the regret is the exact continuous one.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ultimax/boundary.hpp"
#include "ultimax/error.hpp"
#include "ultimax/parallel.hpp"
#include "ultimax/paths.hpp"
#include "ultimax/statistics.hpp"

namespace ultimax {

/// Stop at the first step with X >= b(t, regime), looking up b at the latest node <= t.
struct BoundaryPolicy {
    const Boundary* boundary = nullptr;
};
struct ImmediatePolicy {};
struct AtMaturityPolicy {};
/// Stop at the first step with X >= levels[regime].
struct FixedThresholdPolicy {
    std::vector<double> levels;
};

using Policy = std::variant<BoundaryPolicy, ImmediatePolicy, AtMaturityPolicy, FixedThresholdPolicy>;

inline std::string policy_name(const Policy& policy) {
    struct Namer {
        std::string operator()(const BoundaryPolicy&) const { return "boundary"; }
        std::string operator()(const ImmediatePolicy&) const { return "immediate"; }
        std::string operator()(const AtMaturityPolicy&) const { return "at_maturity"; }
        std::string operator()(const FixedThresholdPolicy& p) const {
            std::ostringstream os;
            os << "threshold(";
            for (std::size_t j = 0; j < p.levels.size(); ++j) os << (j ? ";" : "") << p.levels[j];
            os << ')';
            return os.str();
        }
    };
    return std::visit(Namer{}, policy);
}

inline void check_policy(const Policy& policy, const ValidatedModel& model) {
    if (const auto* b = std::get_if<BoundaryPolicy>(&policy)) {
        if (b->boundary == nullptr) throw Error(ErrorCode::InvalidArgument, "boundary policy without a boundary");
        const Grid& g = b->boundary->grid();
        if (g.horizon() != model.horizon() || g.regimes() != model.regimes())
            throw Error(ErrorCode::InvalidArgument, "boundary grid does not match the model");
    }
    if (const auto* f = std::get_if<FixedThresholdPolicy>(&policy))
        if (f->levels.size() != model.regimes())
            throw Error(ErrorCode::InvalidArgument, "threshold policy needs one level per regime");
}

/**
 * Index of the stopping step. The test at step k reads times[k], states[k],
 * y[k] and ymax[k] only, and the scan ends at the first hit.
 */
inline std::size_t stopping_index(const Policy& policy, const std::vector<double>& times, const SinglePath& path) {
    const std::size_t last = times.size() - 1;
    auto first_hit = [&](auto&& level) {
        for (std::size_t k = 0; k < last; ++k) {
            const double x = std::max(1.0, path.ymax[k]) / path.y[k];
            if (x >= level(times[k], path.states[k])) return k;
        }
        return last;
    };
    struct Visitor {
        decltype(first_hit)& hit;
        std::size_t last;
        std::size_t operator()(const BoundaryPolicy& p) const {
            return hit([&](double t, std::size_t j) { return p.boundary->level_before(t, j); });
        }
        std::size_t operator()(const ImmediatePolicy&) const { return 0; }
        std::size_t operator()(const AtMaturityPolicy&) const { return last; }
        std::size_t operator()(const FixedThresholdPolicy& p) const {
            return hit([&](double, std::size_t j) { return p.levels[j]; });
        }
    };
    return std::visit(Visitor{first_hit, last}, policy);
}

inline double regret(const SinglePath& path, std::size_t tau) { return path.ymax.back() / path.y[tau]; }

struct RegretEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::string policy;
};

struct PairedDifference {
    std::size_t a = 0;  ///< policy indices
    std::size_t b = 0;
    double diff = 0.0;  ///< mean(regret_a - regret_b)
    double diff_se = 0.0;
    std::size_t differing_paths = 0;  ///< paths where the two regrets are not identical
};

struct PolicyComparison {
    std::vector<RegretEstimate> estimates;
    std::vector<PairedDifference> pairs;
    std::vector<std::size_t> ranking;  ///< policy indices, lowest mean regret first
    std::size_t j0 = 0;

    const PairedDifference& pair(std::size_t a, std::size_t b) const {
        for (const auto& p : pairs)
            if (p.a == a && p.b == b) return p;
        throw Error(ErrorCode::InvalidArgument, "no such policy pair");
    }
};

/// Regret of several policies on a shared set of paths (common random numbers).
inline PolicyComparison compare_policies(const ValidatedModel& model, const std::vector<Policy>& policies,
                                         std::size_t j0, std::size_t n_paths, std::size_t n_steps,
                                         std::uint64_t seed, std::size_t threads = default_threads()) {
    if (policies.empty()) throw Error(ErrorCode::InvalidArgument, "no policies to evaluate");
    if (n_paths < 2) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 2");
    for (const auto& p : policies) check_policy(p, model);
    const PathSimulator sim(model, 0.0, j0, n_steps, MaxMonitoring::BrownianBridge);
    const std::size_t P = policies.size();

    struct Partial {
        std::vector<RunningStats> single;
        std::vector<RunningStats> paired;  // a * P + b, a < b
        std::vector<std::size_t> differing;
    };
    Partial init{std::vector<RunningStats>(P), std::vector<RunningStats>(P * P), std::vector<std::size_t>(P * P, 0)};
    const Partial total = parallel_reduce<Partial>(
        n_paths, threads,
        [&](std::size_t begin, std::size_t end, Partial& acc) {
            SinglePath path;
            std::vector<double> r(P);
            for (std::size_t i = begin; i < end; ++i) {
                sim.simulate(path_seed(seed, i), path);
                for (std::size_t a = 0; a < P; ++a) {
                    r[a] = regret(path, stopping_index(policies[a], sim.times(), path));
                    acc.single[a].add(r[a]);
                }
                for (std::size_t a = 0; a < P; ++a)
                    for (std::size_t b = a + 1; b < P; ++b) {
                        acc.paired[a * P + b].add(r[a] - r[b]);
                        if (r[a] != r[b]) ++acc.differing[a * P + b];
                    }
            }
        },
        [P](Partial& sum, const Partial& part) {
            for (std::size_t a = 0; a < P; ++a) sum.single[a].merge(part.single[a]);
            for (std::size_t i = 0; i < P * P; ++i) {
                sum.paired[i].merge(part.paired[i]);
                sum.differing[i] += part.differing[i];
            }
        },
        init);

    PolicyComparison out;
    out.j0 = j0;
    for (std::size_t a = 0; a < P; ++a) {
        const Estimate e = total.single[a].estimate();
        out.estimates.push_back({e.value, e.std_error, e.n, policy_name(policies[a])});
    }
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = a + 1; b < P; ++b) {
            const Estimate d = total.paired[a * P + b].estimate();
            out.pairs.push_back({a, b, d.value, d.std_error, total.differing[a * P + b]});
        }
    out.ranking.resize(P);
    std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
    std::stable_sort(out.ranking.begin(), out.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return out.estimates[a].mean < out.estimates[b].mean; });
    return out;
}

inline RegretEstimate evaluate_policy(const ValidatedModel& model, const Policy& policy, std::size_t j0,
                                      std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                      std::size_t threads = default_threads()) {
    return compare_policies(model, {policy}, j0, n_paths, n_steps, seed, threads).estimates.front();
}

/// Evaluation CSV: policy,j0,mean,std_error,n_paths.
inline void write_evaluation_csv(const std::vector<PolicyComparison>& runs, std::ostream& os) {
    const auto precision = os.precision(12);
    os << "policy,j0,mean,std_error,n_paths\n";
    for (const auto& run : runs)
        for (std::size_t i : run.ranking) {
            const auto& e = run.estimates[i];
            os << e.policy << ',' << run.j0 + 1 << ',' << e.mean << ',' << e.std_error << ',' << e.n_paths << '\n';
        }
    os.precision(precision);
}

/// Paired-comparison CSV: j0,policy_a,policy_b,diff,diff_se.
inline void write_paired_csv(const std::vector<PolicyComparison>& runs, std::ostream& os) {
    const auto precision = os.precision(12);
    os << "j0,policy_a,policy_b,diff,diff_se\n";
    for (const auto& run : runs)
        for (const auto& p : run.pairs)
            os << run.j0 + 1 << ',' << run.estimates[p.a].policy << ',' << run.estimates[p.b].policy << ',' << p.diff
               << ',' << p.diff_se << '\n';
    os.precision(precision);
}

}  // namespace ultimax
