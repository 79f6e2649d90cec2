#pragma once

// Umbrella header for the whole library.

#include "mmhcl/autograd.hpp"
#include "mmhcl/cli.hpp"
#include "mmhcl/common.hpp"
#include "mmhcl/dataset.hpp"
#include "mmhcl/dense.hpp"
#include "mmhcl/evaluator.hpp"
#include "mmhcl/graphs.hpp"
#include "mmhcl/knn.hpp"
#include "mmhcl/model.hpp"
#include "mmhcl/objective.hpp"
#include "mmhcl/operators.hpp"
#include "mmhcl/rng.hpp"
#include "mmhcl/runconfig.hpp"
#include "mmhcl/serialize.hpp"
#include "mmhcl/sparse.hpp"
#include "mmhcl/trainer.hpp"
