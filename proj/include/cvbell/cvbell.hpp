#pragma once

#include "cvbell/bell.hpp"
#include "cvbell/bivariate_normal.hpp"
#include "cvbell/coarse_grain.hpp"
#include "cvbell/entropy.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/experiment_sim.hpp"
#include "cvbell/gaussian_core.hpp"
#include "cvbell/hermite.hpp"
#include "cvbell/nelder_mead.hpp"
#include "cvbell/parallel.hpp"
#include "cvbell/quadrature.hpp"
#include "cvbell/version.hpp"
