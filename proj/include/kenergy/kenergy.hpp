#pragma once

#include "kenergy/errors.hpp"
#include "kenergy/grid.hpp"
#include "kenergy/geometry.hpp"
#include "kenergy/polytope.hpp"
#include "kenergy/pwa.hpp"
#include "kenergy/convex_core.hpp"
#include "kenergy/geodesic.hpp"
#include "kenergy/energy.hpp"
#include "kenergy/stability.hpp"
#include "kenergy/parallel.hpp"
#include "kenergy/io.hpp"
#include "kenergy/cli.hpp"
