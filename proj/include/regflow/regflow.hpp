#pragma once

// Umbrella header: iterative regularization of ill-posed linear systems by
// damped second-order flows, with classical baselines, closed-form spectral
// oracles, discrepancy stopping, and the benchmark harness.

#include "regflow/baselines.hpp"
#include "regflow/bench.hpp"
#include "regflow/damping.hpp"
#include "regflow/integrators.hpp"
#include "regflow/linalg.hpp"
#include "regflow/oracle.hpp"
#include "regflow/problems.hpp"
#include "regflow/report_io.hpp"
#include "regflow/rng.hpp"
#include "regflow/stopping.hpp"
