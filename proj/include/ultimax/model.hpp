/**
 * @file model.hpp
 * @brief Regime-switching GBM problem instance: validation and exercise classification.
 *
 * The asset follows dY = mu(beta) Y dt + sigma(beta) Y dB where beta is a
 * continuous-time Markov chain on {0, ..., m-1} with generator Q. Regimes are
 * zero-based in code; CSV files and configs use one-based labels.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string_view>
#include <utility>
#include <vector>

#include "ultimax/error.hpp"
#include "ultimax/matrix.hpp"

namespace ultimax {

struct RegimeModel {
    std::vector<double> mu;     ///< drift per regime (1/time)
    std::vector<double> sigma;  ///< volatility per regime (1/sqrt(time))
    SquareMatrix Q;             ///< generator, rows sum to zero
    double T = 1.0;             ///< horizon

    std::size_t regimes() const noexcept { return mu.size(); }

    bool operator==(const RegimeModel&) const = default;
};

/// Absolute tolerance on generator row sums.
inline constexpr double kGeneratorRowTolerance = 1e-12;

/// A RegimeModel whose invariants have been checked. Only validate() builds one.
class ValidatedModel {
public:
    const RegimeModel& model() const noexcept { return model_; }
    std::size_t regimes() const noexcept { return model_.regimes(); }
    double mu(std::size_t j) const { return model_.mu[j]; }
    double sigma(std::size_t j) const { return model_.sigma[j]; }
    double variance(std::size_t j) const { return model_.sigma[j] * model_.sigma[j]; }
    double q(std::size_t i, std::size_t j) const { return model_.Q(i, j); }
    const SquareMatrix& generator() const noexcept { return model_.Q; }
    double horizon() const noexcept { return model_.T; }

    /// Largest exit rate max_j |q_jj|.
    double max_exit_rate() const {
        double rate = 0.0;
        for (std::size_t j = 0; j < regimes(); ++j) rate = std::max(rate, -model_.Q(j, j));
        return rate;
    }

    bool all_drifts_nonnegative() const {
        return std::all_of(model_.mu.begin(), model_.mu.end(), [](double m) { return m >= 0.0; });
    }

    bool operator==(const ValidatedModel&) const = default;

private:
    explicit ValidatedModel(RegimeModel m) : model_(std::move(m)) {}
    friend ValidatedModel validate(RegimeModel model);

    RegimeModel model_;
};

inline ValidatedModel validate(RegimeModel model) {
    const std::size_t m = model.regimes();
    if (m == 0) throw Error(ErrorCode::InvalidModel, "regime count must be at least 1");
    if (model.sigma.size() != m || model.Q.size() != m) {
        std::ostringstream os;
        os << "expected " << m << " volatilities and a " << m << "x" << m << " generator";
        throw Error(ErrorCode::InvalidModel, os.str());
    }
    if (!std::isfinite(model.T)) throw Error(ErrorCode::InvalidModel, "horizon is not finite");
    if (model.T <= 0.0) throw Error(ErrorCode::NonPositiveHorizon, "T must be > 0");
    for (std::size_t j = 0; j < m; ++j) {
        if (!std::isfinite(model.mu[j]) || !std::isfinite(model.sigma[j]))
            throw Error(ErrorCode::InvalidModel, "non-finite drift or volatility");
        if (model.sigma[j] <= 0.0) {
            std::ostringstream os;
            os << "sigma[" << j << "] = " << model.sigma[j];
            throw Error(ErrorCode::NonPositiveVolatility, os.str());
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double q = model.Q(i, j);
            if (!std::isfinite(q)) throw Error(ErrorCode::InvalidModel, "non-finite generator entry");
            if (i != j && q < 0.0) {
                std::ostringstream os;
                os << "negative off-diagonal Q(" << i << "," << j << ") = " << q;
                throw Error(ErrorCode::BadGeneratorRow, os.str());
            }
            row_sum += q;
        }
        if (std::abs(row_sum) > kGeneratorRowTolerance) {
            std::ostringstream os;
            os << "row " << i << " sums to " << row_sum;
            throw Error(ErrorCode::BadGeneratorRow, os.str());
        }
    }
    return ValidatedModel(std::move(model));
}

inline ValidatedModel validate(const ValidatedModel& model) { return model; }

enum class ExerciseRegime { ImmediateExercise, ExerciseAtMaturity, General };

constexpr std::string_view to_string(ExerciseRegime r) noexcept {
    switch (r) {
    case ExerciseRegime::ImmediateExercise: return "ImmediateExercise";
    case ExerciseRegime::ExerciseAtMaturity: return "ExerciseAtMaturity";
    case ExerciseRegime::General: return "General";
    }
    return "General";
}

/// mu <= 0 everywhere: stop at once. mu >= sigma^2 everywhere: wait until T.
/// Both inequalities are non-strict; if both hold (mu = 0 = sigma^2 is excluded
/// by sigma > 0) immediate exercise wins.
inline ExerciseRegime classify(const ValidatedModel& model) {
    bool immediate = true;
    bool maturity = true;
    for (std::size_t j = 0; j < model.regimes(); ++j) {
        immediate = immediate && model.mu(j) <= 0.0;
        maturity = maturity && model.mu(j) >= model.variance(j);
    }
    if (immediate) return ExerciseRegime::ImmediateExercise;
    if (maturity) return ExerciseRegime::ExerciseAtMaturity;
    return ExerciseRegime::General;
}

}  // namespace ultimax
