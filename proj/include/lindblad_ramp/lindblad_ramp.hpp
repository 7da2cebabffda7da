#pragma once

#include "error.hpp"
#include "model.hpp"
#include "liouvillian.hpp"
#include "ode.hpp"
#include "propagator.hpp"
#include "series.hpp"
#include "chebyshev.hpp"
#include "nojump.hpp"
#include "quadrature.hpp"
#include "sweep.hpp"
#include "io.hpp"
