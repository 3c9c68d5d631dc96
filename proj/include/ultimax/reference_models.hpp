/**
 * @file reference_models.hpp
 * @brief Parameter sets used by the acceptance suite, the calibration tool and the CLI.
 */
#pragma once

#include "ultimax/model.hpp"

namespace ultimax::reference {

inline SquareMatrix two_state_generator() { return SquareMatrix{{-2.5, 2.5}, {2.0, -2.0}}; }

/// Positive drifts in both regimes; the regime-switching figure case.
inline RegimeModel figure_model() { return {{0.15, 0.05}, {0.5, 0.3}, two_state_generator(), 0.5}; }

/// mu <= 0 in every regime: stopping at once is optimal.
inline RegimeModel immediate_model() { return {{-0.05, -0.1}, {0.3, 0.5}, two_state_generator(), 0.5}; }

/// mu >= sigma^2 in every regime: waiting until T is optimal.
inline RegimeModel maturity_model() { return {{0.3, 0.5}, {0.5, 0.7}, two_state_generator(), 0.5}; }

inline RegimeModel zero_drift_model() { return {{0.0, 0.0}, {0.3, 0.5}, two_state_generator(), 0.5}; }

inline RegimeModel single_regime_model() { return {{0.05}, {0.3}, SquareMatrix{{0.0}}, 1.0}; }

/// Time steps of the figure configuration.
inline constexpr std::size_t kFigureTimeSteps = 100;

}  // namespace ultimax::reference
