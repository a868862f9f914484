#pragma once

// Umbrella header: the full delta-discretized incidence geometry toolkit.

#include "rational.hpp"
#include "scale.hpp"
#include "cube.hpp"
#include "cube_set.hpp"
#include "tube.hpp"
#include "tube_set.hpp"
#include "set_io.hpp"
#include "regularity.hpp"
#include "multiscale.hpp"
#include "generators.hpp"
#include "incidence.hpp"
#include "highlow.hpp"
#include "fit.hpp"
#include "experiments.hpp"
