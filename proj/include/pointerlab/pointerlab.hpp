#pragma once

#include "pointerlab/errors.hpp"
#include "pointerlab/integrators.hpp"
#include "pointerlab/master.hpp"
#include "pointerlab/numerics.hpp"
#include "pointerlab/phasespace.hpp"
#include "pointerlab/pointer_gaussian.hpp"
#include "pointerlab/qsd.hpp"
#include "pointerlab/rng.hpp"
#include "pointerlab/robustness.hpp"
