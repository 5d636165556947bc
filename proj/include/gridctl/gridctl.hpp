#ifndef GRIDCTL_GRIDCTL_HPP_
#define GRIDCTL_GRIDCTL_HPP_

#include "gridctl/action_space.hpp"
#include "gridctl/agents.hpp"
#include "gridctl/control.hpp"
#include "gridctl/environment.hpp"
#include "gridctl/experiment.hpp"
#include "gridctl/grid_model.hpp"
#include "gridctl/learner.hpp"
#include "gridctl/powerflow.hpp"
#include "gridctl/scenario.hpp"

#endif  // GRIDCTL_GRIDCTL_HPP_
