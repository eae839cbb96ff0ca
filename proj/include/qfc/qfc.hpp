#pragma once

#include "qfc/config.hpp"
#include "qfc/conversion.hpp"
#include "qfc/counting.hpp"
#include "qfc/encodings.hpp"
#include "qfc/events.hpp"
#include "qfc/experiments.hpp"
#include "qfc/linalg.hpp"
#include "qfc/metrics.hpp"
#include "qfc/rng.hpp"
#include "qfc/sources.hpp"
#include "qfc/state.hpp"
#include "qfc/tomography.hpp"
#include "qfc/units.hpp"
