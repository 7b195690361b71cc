#pragma once

#include "ascent/auglag.hpp"
#include "ascent/cobyla.hpp"
#include "ascent/core.hpp"
#include "ascent/gradcheck.hpp"
#include "ascent/isres.hpp"
#include "ascent/lbfgs.hpp"
#include "ascent/mma.hpp"
#include "ascent/problems.hpp"
#include "ascent/solve.hpp"
