#pragma once

// Umbrella header for the whole library.

#include "reggraph/analysis.hpp"
#include "reggraph/assembly.hpp"
#include "reggraph/bilevel.hpp"
#include "reggraph/combine.hpp"
#include "reggraph/config.hpp"
#include "reggraph/functionals.hpp"
#include "reggraph/graph.hpp"
#include "reggraph/inverse.hpp"
#include "reggraph/io.hpp"
#include "reggraph/library.hpp"
#include "reggraph/linop.hpp"
#include "reggraph/operators.hpp"
#include "reggraph/oracle.hpp"
#include "reggraph/rng.hpp"
#include "reggraph/solver.hpp"
#include "reggraph/space.hpp"
#include "reggraph/subspace.hpp"
