#pragma once

#include "catsim/config.hpp"
#include "catsim/csv.hpp"
#include "catsim/error.hpp"
#include "catsim/metrics.hpp"
#include "catsim/predictor.hpp"
#include "catsim/random.hpp"
#include "catsim/reporting.hpp"
#include "catsim/simulator.hpp"
#include "catsim/trace.hpp"
