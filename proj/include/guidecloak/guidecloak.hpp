#pragma once

// Design and verification of reflection-invisible small-obstacle swarms in a
// closed acoustic waveguide with a rectangular cross section.

#include "coefficients.hpp"
#include "designers.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "flies.hpp"
#include "foldy.hpp"
#include "geometry.hpp"
#include "greens.hpp"
#include "modes.hpp"
#include "obstruction.hpp"
#include "version.hpp"
