// Copyright 2026 The Hera Authors.
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

#pragma once

#include "hera/common.hpp"
#include "hera/geometry.hpp"
#include "hera/sh.hpp"
#include "hera/mesh.hpp"
#include "hera/mesh_raster.hpp"
#include "hera/gsplat.hpp"
#include "hera/hybrid.hpp"
#include "hera/rigging.hpp"
#include "hera/loss.hpp"
#include "hera/backward.hpp"
#include "hera/adam.hpp"
#include "hera/densify.hpp"
#include "hera/fit.hpp"
