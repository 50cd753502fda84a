// Umbrella header.
#pragma once

#include "pspin/estimators.hpp"
#include "pspin/field.hpp"
#include "pspin/rng.hpp"
#include "pspin/sphere.hpp"
#include "pspin/stats.hpp"
#include "pspin/sweep.hpp"
#include "pspin/testfunc.hpp"
#include "pspin/verify.hpp"
#include "pspin/verify_suite.hpp"
#include "pspin/version.hpp"
