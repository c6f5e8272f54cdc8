#pragma once

#include "rwtune/error.hpp"
#include "rwtune/random.hpp"
#include "rwtune/model.hpp"
#include "rwtune/analytic.hpp"
#include "rwtune/proposals.hpp"
#include "rwtune/sampler.hpp"
#include "rwtune/logistic.hpp"
#include "rwtune/tuner.hpp"
#include "rwtune/experiments.hpp"
#include "rwtune/acceptance_slope.hpp"
