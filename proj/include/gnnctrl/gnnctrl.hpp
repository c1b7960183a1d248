#ifndef GNNCTRL_GNNCTRL_HPP
#define GNNCTRL_GNNCTRL_HPP

// Umbrella header: decentralized controllers on time-varying graphs —
// filters, GCNN/GRNN architectures, exact BPTT training against expert
// flocking demonstrations, and the experiment harness.

#include "gnnctrl/adam.hpp"
#include "gnnctrl/arch.hpp"
#include "gnnctrl/autodiff.hpp"
#include "gnnctrl/distributed.hpp"
#include "gnnctrl/errors.hpp"
#include "gnnctrl/filter.hpp"
#include "gnnctrl/flocking.hpp"
#include "gnnctrl/graph.hpp"
#include "gnnctrl/harness.hpp"
#include "gnnctrl/kvconfig.hpp"
#include "gnnctrl/parallel.hpp"
#include "gnnctrl/rng.hpp"
#include "gnnctrl/serialize.hpp"
#include "gnnctrl/train.hpp"
#include "gnnctrl/trajectory.hpp"

#endif  // GNNCTRL_GNNCTRL_HPP
