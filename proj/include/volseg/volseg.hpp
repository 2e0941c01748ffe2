// Copyright 2026 The VolSeg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOLSEG_VOLSEG_HPP_
#define VOLSEG_VOLSEG_HPP_

// Umbrella header pulling in the whole library.

#include "volseg/augment.hpp"
#include "volseg/blend.hpp"
#include "volseg/config.hpp"
#include "volseg/decode.hpp"
#include "volseg/edt.hpp"
#include "volseg/errors.hpp"
#include "volseg/geometry.hpp"
#include "volseg/inference.hpp"
#include "volseg/losses.hpp"
#include "volseg/metrics.hpp"
#include "volseg/pipeline.hpp"
#include "volseg/predictor.hpp"
#include "volseg/rng.hpp"
#include "volseg/sampling.hpp"
#include "volseg/stitch.hpp"
#include "volseg/subprocess_predictor.hpp"
#include "volseg/targets.hpp"
#include "volseg/tiles.hpp"
#include "volseg/tta.hpp"
#include "volseg/version.hpp"
#include "volseg/volume.hpp"
#include "volseg/volume_io.hpp"

#endif  // VOLSEG_VOLSEG_HPP_
