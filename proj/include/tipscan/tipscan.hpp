#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "system.hpp"
#include "paths.hpp"
#include "parallel.hpp"
#include "pullback.hpp"
#include "flow.hpp"
#include "basins.hpp"
#include "scenarios.hpp"
#include "config.hpp"
#include "io.hpp"
