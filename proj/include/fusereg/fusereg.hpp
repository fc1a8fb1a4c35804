#pragma once

#include "fusereg/baselines.hpp"
#include "fusereg/evaluation.hpp"
#include "fusereg/io/config.hpp"
#include "fusereg/io/csv.hpp"
#include "fusereg/lasso.hpp"
#include "fusereg/objective.hpp"
#include "fusereg/simulation.hpp"
#include "fusereg/solver_l1.hpp"
#include "fusereg/solver_l2.hpp"
#include "fusereg/standardize.hpp"
#include "fusereg/types.hpp"
#include "fusereg/weighting.hpp"
