// Copyright 2026 The histest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Umbrella header.

#pragma once

#include "histest/adversarial.hpp"
#include "histest/cell_splitting.hpp"
#include "histest/covering.hpp"
#include "histest/discrete_testers.hpp"
#include "histest/geometry.hpp"
#include "histest/harness.hpp"
#include "histest/histogram.hpp"
#include "histest/histogram_io.hpp"
#include "histest/identity_tester.hpp"
#include "histest/random_instances.hpp"
#include "histest/rng.hpp"
