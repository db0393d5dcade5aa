#pragma once

#include "rlnoc/topology.hpp"
#include "rlnoc/traffic.hpp"
#include "rlnoc/analysis.hpp"
#include "rlnoc/simulator.hpp"
#include "rlnoc/harness.hpp"
#include "rlnoc/fixtures.hpp"
#include "rlnoc/io.hpp"
#include "rlnoc/plot.hpp"
