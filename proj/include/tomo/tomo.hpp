#pragma once

#include "tomo/basis.hpp"
#include "tomo/common.hpp"
#include "tomo/config.hpp"
#include "tomo/distance.hpp"
#include "tomo/domain.hpp"
#include "tomo/eikonal.hpp"
#include "tomo/experiments.hpp"
#include "tomo/field.hpp"
#include "tomo/geodesics.hpp"
#include "tomo/io.hpp"
#include "tomo/mcmc.hpp"
#include "tomo/parallel.hpp"
#include "tomo/quadrature.hpp"
#include "tomo/rng.hpp"
#include "tomo/stability.hpp"
#include "tomo/statmodel.hpp"
