#pragma once

#include "cetseg/core.hpp"
#include "cetseg/estimation.hpp"
#include "cetseg/penalties.hpp"
#include "cetseg/search.hpp"
#include "cetseg/joinpin.hpp"
#include "cetseg/longmemory.hpp"
#include "cetseg/simulate.hpp"
#include "cetseg/io.hpp"
#include "cetseg/plot.hpp"
#include "cetseg/analysis.hpp"
