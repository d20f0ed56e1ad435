// Umbrella header: the full engine pair (reference state-vector engine and
// the cycle-schedule engine), circuit language, scenarios, statistics, and
// report machinery.

#pragma once

#include "cycleq/circuit.hpp"
#include "cycleq/measurement.hpp"
#include "cycleq/random.hpp"
#include "cycleq/report.hpp"
#include "cycleq/run.hpp"
#include "cycleq/scenarios.hpp"
#include "cycleq/schedule.hpp"
#include "cycleq/state.hpp"
#include "cycleq/stats.hpp"
