#pragma once

#include "aggregating.hpp"
#include "core.hpp"
#include "defensive.hpp"
#include "extensions.hpp"
#include "losses.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "secondguess.hpp"
#include "harness/audit.hpp"
#include "harness/config.hpp"
#include "harness/io.hpp"
#include "harness/oracle.hpp"
#include "harness/run.hpp"
