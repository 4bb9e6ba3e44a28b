#pragma once

// Cost-optimal dispatch, flexibility quantification and techno-economic
// sizing of residential PV-battery systems.

#include "pvflex/economics.hpp"
#include "pvflex/errors.hpp"
#include "pvflex/flexibility.hpp"
#include "pvflex/scheduler.hpp"
#include "pvflex/sensitivity.hpp"
#include "pvflex/simplex.hpp"
#include "pvflex/synthetic.hpp"
#include "pvflex/timeseries.hpp"
