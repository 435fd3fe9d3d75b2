#pragma once

#include "config.hpp"
#include "dipolar.hpp"
#include "errors.hpp"
#include "fibering.hpp"
#include "functionals.hpp"
#include "grid.hpp"
#include "groundstate.hpp"
#include "io.hpp"
#include "summation.hpp"
#include "trialstates.hpp"
#include "verify.hpp"
