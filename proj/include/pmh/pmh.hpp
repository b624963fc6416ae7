#pragma once

#include "pmh/csv.hpp"
#include "pmh/densities.hpp"
#include "pmh/diagnostics.hpp"
#include "pmh/errors.hpp"
#include "pmh/kalman.hpp"
#include "pmh/lgss.hpp"
#include "pmh/particle_filter.hpp"
#include "pmh/rng.hpp"
#include "pmh/sampler.hpp"
#include "pmh/sv.hpp"
#include "pmh/time_series.hpp"
