#pragma once

// Umbrella header for the variance-ratio meta-analysis library.

#include "varmeta/special.hpp"
#include "varmeta/vst.hpp"
#include "varmeta/meta_tests.hpp"
#include "varmeta/estimators.hpp"
#include "varmeta/diagnostics.hpp"
#include "varmeta/simulation.hpp"
#include "varmeta/io.hpp"
#include "varmeta/bmd.hpp"
#include "varmeta/svg.hpp"
