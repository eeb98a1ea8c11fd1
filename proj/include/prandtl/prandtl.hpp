#pragma once

#include "prandtl/dyadic.hpp"
#include "prandtl/experiments.hpp"
#include "prandtl/fft.hpp"
#include "prandtl/grid_field.hpp"
#include "prandtl/io.hpp"
#include "prandtl/norms.hpp"
#include "prandtl/quadrature.hpp"
#include "prandtl/radius.hpp"
#include "prandtl/shear.hpp"
#include "prandtl/solver.hpp"
#include "prandtl/verification.hpp"
#include "prandtl/weights.hpp"
