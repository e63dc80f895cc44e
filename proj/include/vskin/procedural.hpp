// Copyright 2026 The vskin Authors
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

// Procedurally generated creatures: a static body bone with tentacles made
// of bone chains, skinned as tubes. Used by the benchmark and the reference
// scenes.

#pragma once

#include <cstddef>

#include "vskin/assets_io.hpp"

namespace vskin {

struct CreatureSpec {
  std::size_t tentacles = 4;
  std::size_t bones_per_tentacle = 3;
  std::size_t target_vertices = 150'000;
  double tentacle_length = 3.0;
  double tentacle_radius = 0.25;
  double k_squash = 0.05;
  double k_floppy = 0.08;
  double clip_duration = 2.0;
  std::size_t keys_per_track = 5;
};

// Skeleton: bone 0 is the body (never animated), followed by the tentacle
// chains. Every tentacle bone gets a looping clip named "swim" whose
// rotations oscillate about axes orthogonal to the chain. Gains are uniform.
SceneFile make_creature_scene(const CreatureSpec& spec);

}  // namespace vskin
