#ifndef SPATIALGOF_HPP
#define SPATIALGOF_HPP

#include "spatialgof/dataset.hpp"
#include "spatialgof/errors.hpp"
#include "spatialgof/goftest.hpp"
#include "spatialgof/io.hpp"
#include "spatialgof/kernels.hpp"
#include "spatialgof/numerics.hpp"
#include "spatialgof/parallel.hpp"
#include "spatialgof/rng.hpp"
#include "spatialgof/simulation.hpp"
#include "spatialgof/smoothing.hpp"
#include "spatialgof/trend.hpp"
#include "spatialgof/variography.hpp"

#endif  // SPATIALGOF_HPP
