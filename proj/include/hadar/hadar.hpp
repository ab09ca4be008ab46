/*
 * Copyright 2026 The Hadar Simulator Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "hadar/baselines.hpp"
#include "hadar/domain.hpp"
#include "hadar/hadar_scheduler.hpp"
#include "hadar/hadare.hpp"
#include "hadar/policy.hpp"
#include "hadar/pricing.hpp"
#include "hadar/records.hpp"
#include "hadar/simulator.hpp"
#include "hadar/verify.hpp"
#include "hadar/workload_io.hpp"
