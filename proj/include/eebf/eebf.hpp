#pragma once

// Umbrella header for the energy-efficient beamforming library.

#include "eebf/asymptotic.hpp"
#include "eebf/baselines.hpp"
#include "eebf/calibration.hpp"
#include "eebf/channel.hpp"
#include "eebf/common.hpp"
#include "eebf/config.hpp"
#include "eebf/det_equiv.hpp"
#include "eebf/experiment.hpp"
#include "eebf/geometry.hpp"
#include "eebf/metrics.hpp"
#include "eebf/rng.hpp"
#include "eebf/system_params.hpp"
#include "eebf/wmmse_ee.hpp"
