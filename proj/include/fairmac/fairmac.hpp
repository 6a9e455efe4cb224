#pragma once

#include "fairmac/analytic.hpp"
#include "fairmac/errors.hpp"
#include "fairmac/experiments.hpp"
#include "fairmac/rng.hpp"
#include "fairmac/schemes.hpp"
#include "fairmac/simulator.hpp"
#include "fairmac/topology.hpp"
