#pragma once

// Umbrella header for the minimal-surface image restoration library.

#include "minsurf/bench.hpp"
#include "minsurf/degrade.hpp"
#include "minsurf/grid.hpp"
#include "minsurf/io.hpp"
#include "minsurf/metrics.hpp"
#include "minsurf/model.hpp"
#include "minsurf/parallel.hpp"
#include "minsurf/solvers.hpp"
#include "minsurf/spectral.hpp"
