#pragma once

#include "insat/errors.hpp"
#include "insat/polynomial.hpp"
#include "insat/flatness.hpp"
#include "insat/trajectory.hpp"
#include "insat/polyopt.hpp"
#include "insat/voxel_map.hpp"
#include "insat/kd_tree.hpp"
#include "insat/world.hpp"
#include "insat/world_io.hpp"
#include "insat/feasibility.hpp"
#include "insat/planner.hpp"
#include "insat/config_io.hpp"
#include "insat/bench.hpp"
