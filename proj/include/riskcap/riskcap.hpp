#pragma once

// Umbrella header for the riskcap library: closed-form solvers for the
// log-utility investment/consumption problem in a Black-Scholes market
// under a uniform-in-time VaR or Expected-Shortfall cap, with Monte Carlo
// verification.

#include "riskcap/control.hpp"
#include "riskcap/errors.hpp"
#include "riskcap/es_solver.hpp"
#include "riskcap/functionals.hpp"
#include "riskcap/market.hpp"
#include "riskcap/montecarlo.hpp"
#include "riskcap/normal.hpp"
#include "riskcap/quadrature.hpp"
#include "riskcap/riskmeasures.hpp"
#include "riskcap/rootfind.hpp"
#include "riskcap/selfcheck.hpp"
#include "riskcap/solution.hpp"
#include "riskcap/var_solver.hpp"
#include "riskcap/weights.hpp"
