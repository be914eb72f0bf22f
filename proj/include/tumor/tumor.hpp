#pragma once

// Umbrella header for the model library (the CLI pieces live in config.hpp and commands.hpp).

#include "tumor/errors.hpp"
#include "tumor/specfun.hpp"
#include "tumor/quadrature.hpp"
#include "tumor/nutrient.hpp"
#include "tumor/dopri.hpp"
#include "tumor/radial.hpp"
#include "tumor/periodic.hpp"
#include "tumor/stability.hpp"
#include "tumor/fields.hpp"
