#pragma once

#include "ppgeo/error.hpp"
#include "ppgeo/grid.hpp"
#include "ppgeo/core_geometry.hpp"
#include "ppgeo/parallax.hpp"
#include "ppgeo/plane_estimation.hpp"
#include "ppgeo/synthetic.hpp"
#include "ppgeo/losses_metrics.hpp"
#include "ppgeo/io/files.hpp"
#include "ppgeo/io/png16.hpp"
#include "ppgeo/io/flo.hpp"
#include "ppgeo/io/raster.hpp"
#include "ppgeo/io/text.hpp"
#include "ppgeo/io/scene.hpp"
#include "ppgeo/io/config.hpp"
