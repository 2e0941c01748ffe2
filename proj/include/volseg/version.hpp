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

#ifndef VOLSEG_VERSION_HPP_
#define VOLSEG_VERSION_HPP_

namespace volseg {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever a config key is added, removed, or changes type, so dumped
// configs carry enough information to detect schema drift.
inline constexpr int kSchemaVersion = 1;

}  // namespace volseg

#endif  // VOLSEG_VERSION_HPP_
