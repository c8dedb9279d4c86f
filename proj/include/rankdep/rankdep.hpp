#pragma once

// Distribution-free measures of association from optimal-transport ranks,
// geometric graphs, and kernel statistics.

#include "rankdep/core.hpp"
#include "rankdep/estimator.hpp"
#include "rankdep/geograph.hpp"
#include "rankdep/grids.hpp"
#include "rankdep/inference.hpp"
#include "rankdep/kernels.hpp"
#include "rankdep/mathutil.hpp"
#include "rankdep/models.hpp"
#include "rankdep/oracles.hpp"
#include "rankdep/ot_ranks.hpp"
#include "rankdep/rng.hpp"
