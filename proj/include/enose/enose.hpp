#pragma once

#include "enose/calibration.hpp"
#include "enose/config.hpp"
#include "enose/csv.hpp"
#include "enose/error.hpp"
#include "enose/locale.hpp"
#include "enose/quality.hpp"
#include "enose/random.hpp"
#include "enose/service.hpp"
#include "enose/signal_metrics.hpp"
#include "enose/simulator.hpp"
#include "enose/store.hpp"
#include "enose/telemetry.hpp"
