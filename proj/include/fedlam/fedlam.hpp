#ifndef FEDLAM_FEDLAM_HPP
#define FEDLAM_FEDLAM_HPP

#include "fedlam/config.hpp"
#include "fedlam/dataset.hpp"
#include "fedlam/errors.hpp"
#include "fedlam/hessian.hpp"
#include "fedlam/idx.hpp"
#include "fedlam/latency.hpp"
#include "fedlam/learner.hpp"
#include "fedlam/model.hpp"
#include "fedlam/modem.hpp"
#include "fedlam/orchestrator.hpp"
#include "fedlam/outputs.hpp"
#include "fedlam/planner.hpp"
#include "fedlam/rng.hpp"

#endif  // FEDLAM_FEDLAM_HPP
