// Umbrella header: the whole library.
#pragma once

#include "portfolio/core_model.hpp"
#include "portfolio/instance_io.hpp"
#include "portfolio/expansion.hpp"
#include "portfolio/ilp_model.hpp"
#include "portfolio/ilp_builder.hpp"
#include "portfolio/lp_format.hpp"
#include "portfolio/dual_simplex.hpp"
#include "portfolio/solver.hpp"
#include "portfolio/brute_force.hpp"
#include "portfolio/datagen.hpp"
#include "portfolio/bench.hpp"
#include "portfolio/service.hpp"
