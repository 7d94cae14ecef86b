// Copyright 2026 The pinnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Umbrella header.

#pragma once

#include "pinnmpc/config.hpp"
#include "pinnmpc/counter_rng.hpp"
#include "pinnmpc/dataset.hpp"
#include "pinnmpc/errors.hpp"
#include "pinnmpc/flight_data.hpp"
#include "pinnmpc/harness.hpp"
#include "pinnmpc/integrators.hpp"
#include "pinnmpc/lbfgs.hpp"
#include "pinnmpc/losses.hpp"
#include "pinnmpc/metrics.hpp"
#include "pinnmpc/mpc.hpp"
#include "pinnmpc/network.hpp"
#include "pinnmpc/pid.hpp"
#include "pinnmpc/quad_dynamics.hpp"
#include "pinnmpc/quaternion.hpp"
#include "pinnmpc/reference.hpp"
#include "pinnmpc/simulator.hpp"
#include "pinnmpc/tracking.hpp"
#include "pinnmpc/trainer.hpp"
