#pragma once

#include "udn/assignment.hpp"
#include "udn/errors.hpp"
#include "udn/exact_optimizer.hpp"
#include "udn/experiment_harness.hpp"
#include "udn/greedy_coordinator.hpp"
#include "udn/ilp_export.hpp"
#include "udn/matrix.hpp"
#include "udn/network_model.hpp"
#include "udn/power_control.hpp"
#include "udn/serialization.hpp"
