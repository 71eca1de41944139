#pragma once

#include "kinoprim/core.hpp"
#include "kinoprim/geometry.hpp"
#include "kinoprim/dynamics.hpp"
#include "kinoprim/steering.hpp"
#include "kinoprim/collision.hpp"
#include "kinoprim/database.hpp"
#include "kinoprim/serialization.hpp"
#include "kinoprim/planner.hpp"
#include "kinoprim/oracle.hpp"
#include "kinoprim/bench/config.hpp"
#include "kinoprim/bench/commands.hpp"
