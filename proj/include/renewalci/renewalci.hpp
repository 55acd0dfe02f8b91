#pragma once

// Umbrella header for the renewal hidden-bias estimation library.

#include "renewalci/csv.hpp"
#include "renewalci/errors.hpp"
#include "renewalci/estimation.hpp"
#include "renewalci/experiments.hpp"
#include "renewalci/families.hpp"
#include "renewalci/observation.hpp"
#include "renewalci/renewal.hpp"
#include "renewalci/rng.hpp"
#include "renewalci/stats.hpp"
