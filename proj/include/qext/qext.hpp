#pragma once

#include "config.hpp"
#include "linprog.hpp"
#include "subspace.hpp"
#include "convex_set.hpp"
#include "set_algebra.hpp"
#include "sampling.hpp"
#include "monotone_map.hpp"
#include "families.hpp"
#include "functions.hpp"
#include "extension.hpp"
#include "verification.hpp"
#include "problem_io.hpp"
#include "cli.hpp"
