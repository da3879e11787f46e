#pragma once

#include "cgv/analytics.hpp"
#include "cgv/belief.hpp"
#include "cgv/error.hpp"
#include "cgv/montecarlo.hpp"
#include "cgv/population.hpp"
#include "cgv/rng.hpp"
#include "cgv/specialfn.hpp"
