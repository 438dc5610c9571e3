#pragma once

#include "common.hpp"
#include "graph.hpp"
#include "layout.hpp"
#include "prox.hpp"
#include "smooth.hpp"
#include "convergence_log.hpp"
#include "split_problem.hpp"
#include "pfdr_solver.hpp"
#include "ppd.hpp"
#include "metrics.hpp"
#include "problems.hpp"
#include "oracle.hpp"
#include "oracle_checks.hpp"
#include "io.hpp"
