#pragma once

#include "viscojoint/error.hpp"
#include "viscojoint/units.hpp"
#include "viscojoint/damper.hpp"
#include "viscojoint/pendulum.hpp"
#include "viscojoint/simplex.hpp"
#include "viscojoint/stats.hpp"
#include "viscojoint/fit.hpp"
#include "viscojoint/finger.hpp"
#include "viscojoint/catch.hpp"
#include "viscojoint/csv.hpp"
#include "viscojoint/config.hpp"
