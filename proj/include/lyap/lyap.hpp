#pragma once

// Umbrella header for the numerical library (config/report/io/log are
// separate: they pull in JSON, OpenSSL and spdlog).

#include "lyap/errors.hpp"
#include "lyap/exponents.hpp"
#include "lyap/green.hpp"
#include "lyap/lattice.hpp"
#include "lyap/parallel.hpp"
#include "lyap/potential.hpp"
#include "lyap/rng.hpp"
#include "lyap/roots.hpp"
#include "lyap/scaling_lab.hpp"
#include "lyap/stats.hpp"
#include "lyap/walk.hpp"
