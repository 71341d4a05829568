#pragma once

#include "phsid/errors.hpp"
#include "phsid/matrix.hpp"
#include "phsid/signal.hpp"
#include "phsid/system.hpp"
#include "phsid/integrators.hpp"
#include "phsid/cost.hpp"
#include "phsid/sensitivity.hpp"
#include "phsid/calibration.hpp"
#include "phsid/random.hpp"
#include "phsid/data_io.hpp"
