// Copyright 2026 The dilation-lab Authors
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

#pragma once

#include "dilation_lab/tensor.hpp"
#include "dilation_lab/parallel.hpp"
#include "dilation_lab/maps.hpp"
#include "dilation_lab/krylov.hpp"
#include "dilation_lab/symmetry.hpp"
#include "dilation_lab/collision.hpp"
#include "dilation_lab/scenarios.hpp"
#include "dilation_lab/io.hpp"
