#pragma once

#include "hmax/budget.hpp"
#include "hmax/errors.hpp"
#include "hmax/joint_pmf.hpp"
#include "hmax/lattice_pmf.hpp"
#include "hmax/maps.hpp"
#include "hmax/tail_function.hpp"
