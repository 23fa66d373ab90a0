#pragma once

// Umbrella header for the mcdn library: probability models that are Markov
// with respect to acyclic directed mixed graphs, built from product-copula
// CDF factorizations over districts, with two-stage estimation and
// cross-validated evaluation.

#include "mcdn/admg.hpp"
#include "mcdn/copulas.hpp"
#include "mcdn/dataset.hpp"
#include "mcdn/district_factor.hpp"
#include "mcdn/districts.hpp"
#include "mcdn/evaluate.hpp"
#include "mcdn/fitting.hpp"
#include "mcdn/marginals.hpp"
#include "mcdn/mh.hpp"
#include "mcdn/model.hpp"
#include "mcdn/moebius.hpp"
#include "mcdn/params.hpp"
#include "mcdn/rng.hpp"
#include "mcdn/separation.hpp"
