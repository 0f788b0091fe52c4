#pragma once

// Convenience umbrella: the whole library in one include.

#include "magjump/types.hpp"
#include "magjump/rng.hpp"
#include "magjump/stats.hpp"
#include "magjump/graph.hpp"
#include "magjump/one_forms.hpp"
#include "magjump/magnetic_operator.hpp"
#include "magjump/path_simulator.hpp"
#include "magjump/fki_estimator.hpp"
#include "magjump/problem_io.hpp"
#include "magjump/runner.hpp"
