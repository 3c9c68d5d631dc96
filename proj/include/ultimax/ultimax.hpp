/**
 * @file ultimax.hpp
 * @brief Umbrella header.
 */
#pragma once

#include "ultimax/boundary.hpp"
#include "ultimax/calibration.hpp"
#include "ultimax/config.hpp"
#include "ultimax/error.hpp"
#include "ultimax/gain.hpp"
#include "ultimax/grid.hpp"
#include "ultimax/markov_chain.hpp"
#include "ultimax/matrix.hpp"
#include "ultimax/model.hpp"
#include "ultimax/parallel.hpp"
#include "ultimax/paths.hpp"
#include "ultimax/random.hpp"
#include "ultimax/reference_models.hpp"
#include "ultimax/statistics.hpp"
#include "ultimax/stepper.hpp"
#include "ultimax/strategy.hpp"
#include "ultimax/tolerances.hpp"
#include "ultimax/value.hpp"
#include "ultimax/volterra.hpp"
