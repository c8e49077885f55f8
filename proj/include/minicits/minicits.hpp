#pragma once

#include "minicits/api.hpp"
#include "minicits/cam.hpp"
#include "minicits/dcc.hpp"
#include "minicits/error.hpp"
#include "minicits/event_log.hpp"
#include "minicits/geonet.hpp"
#include "minicits/icw.hpp"
#include "minicits/ldm.hpp"
#include "minicits/netsim.hpp"
#include "minicits/nmea.hpp"
#include "minicits/positioning.hpp"
#include "minicits/providers.hpp"
#include "minicits/runner.hpp"
#include "minicits/scenario.hpp"
#include "minicits/server.hpp"
#include "minicits/simulation.hpp"
#include "minicits/summary.hpp"
#include "minicits/ubx.hpp"
#include "minicits/vehicle.hpp"
