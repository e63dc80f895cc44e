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

#pragma once

#include <span>
#include <string>
#include <vector>

#include "vskin/geometry.hpp"
#include "vskin/rig.hpp"

namespace vskin {

struct Keyframe {
  double time = 0.0;  // seconds
  Quat rotation;
  Vec3 translation;
};

// Animated local transform of one bone, applied after the bone's rest_local.
struct BoneTrack {
  int bone = 0;
  std::vector<Keyframe> keys;  // strictly increasing times
};

// Bones without a track keep the identity animated transform.
struct AnimationClip {
  std::string name;
  double duration = 0.0;
  bool loop = false;
  std::vector<BoneTrack> tracks;
};

// Throws EmptyTrack for a track without keys, InvalidArgument for bad times
// or bone indices.
void validate_clip(const AnimationClip& clip, std::size_t bone_count);

// Per-bone animated local transform.
struct Pose {
  std::vector<RigidTransform> local;

  static Pose identity(std::size_t bone_count) {
    return {std::vector<RigidTransform>(bone_count)};
  }
};

// Maps t into the clip domain: wrapped into [0, duration) when looping,
// clamped to [0, duration] otherwise.
double clip_time(const AnimationClip& clip, double t);

// Slerp for rotations, lerp for translations, clamped at the first and last
// keys of each track.
Pose evaluate_pose(const AnimationClip& clip, std::size_t bone_count, double t);

// global_i = global_parent ∘ rest_local_i ∘ pose_local_i
std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton,
                                               const Pose& pose);

// Velocities of each bone relative to its parent, expressed in the global
// frame: angular in rad/s, linear in units/s.
struct BoneKinematics {
  std::vector<Vec3> angular;
  std::vector<Vec3> linear;

  static BoneKinematics zero(std::size_t bone_count) {
    return {std::vector<Vec3>(bone_count), std::vector<Vec3>(bone_count)};
  }
  std::size_t size() const { return angular.size(); }
  BoneKinematics scaled(double s) const;
};

// Backward difference of the bone-local transforms (rest_local ∘ pose_local)
// rotated to the global frame by the parent's current global rotation.
// Throws NonPositiveDt.
BoneKinematics bone_velocities_finite_difference(const Skeleton& skeleton,
                                                 const Pose& previous,
                                                 const Pose& current,
                                                 double dt);

// Exact derivative of evaluate_pose at t. Inside a key interval this is the
// constant slerp/lerp rate; at a key the right-hand interval is used (left at
// the last key); clamped regions have zero velocity.
BoneKinematics bone_velocities_analytic(const AnimationClip& clip,
                                        const Skeleton& skeleton, double t);

// Component-wise mean of the last `window` entries (all entries when the
// history is shorter). Throws EmptyHistory / InvalidArgument.
BoneKinematics smooth_velocities(std::span<const BoneKinematics> history,
                                 std::size_t window);

}  // namespace vskin
