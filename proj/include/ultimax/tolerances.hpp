/**
 * @file tolerances.hpp
 * @brief Pinned numerical constants for the default grid (400 space nodes,
 * 200 time steps per unit horizon). Reproduce with the calibrate tool.
 */
#pragma once

#include <string_view>

namespace ultimax {

inline constexpr std::string_view kVersion = "1.0.0";

/// 2 max|G_fine - G_coarse| over the probe points of the reference models, rounded up.
inline constexpr double kGainSchemeTolerance = 6e-4;

/// Same estimate for V.
inline constexpr double kValueSchemeTolerance = 4e-4;

/// Sign threshold for LG: ten times the value scheme tolerance.
inline constexpr double kEpsSign = 10.0 * kValueSchemeTolerance;

/// F >= -kTolAbs counts as stopped. Projection makes F exactly zero on the
/// stopping set, so this only absorbs rounding in V - G.
inline constexpr double kTolAbs = 1e-9;

/// |dV/dx(t, 1+, j)| <= kNormalReflectionConstant dx (measured 28.7).
inline constexpr double kNormalReflectionConstant = 40.0;

/// Largest boundary jump between consecutive t-nodes <= kContinuityConstant sqrt(dt) (measured 0.57).
inline constexpr double kContinuityConstant = 1.0;

/// |slope_below - slope_above| <= kSmoothFitConstant dx at t = T/2 (measured 2.3).
inline constexpr double kSmoothFitConstant = 4.0;

/// Required reduction factor of smooth-fit mismatch and normal-reflection slope when dx halves.
inline constexpr double kHalvingFactor = 1.7;

/// Relative tolerance of the F time-monotonicity check, as a fraction of max|F|.
inline constexpr double kMonotoneRelTolerance = 1e-6;

/// Relative Volterra residual bound.
inline constexpr double kVolterraRelTolerance = 0.05;

}  // namespace ultimax
