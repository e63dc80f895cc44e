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

// Baseline linear blend skinning and the finite-difference vertex velocity
// used as the reference for velocity decomposition.

#pragma once

#include <span>
#include <vector>

#include "vskin/geometry.hpp"
#include "vskin/kinematics.hpp"
#include "vskin/rig.hpp"

namespace vskin {

// T_i = posed_global_i ∘ rest_global_i⁻¹, one per bone.
using SkinningMatrices = std::vector<RigidTransform>;

SkinningMatrices skinning_matrices(std::span<const RigidTransform> posed_globals,
                                   std::span<const RigidTransform> rest_globals);

// Affine form of a skinning transform used by the per-vertex kernels.
struct AffineTransform {
  Mat3 linear;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return linear * p + translation; }
};

std::vector<AffineTransform> to_affine(std::span<const RigidTransform> transforms);

// p_u = Σ_i w_ui T_i p̄_u, bones summed in row order.
std::vector<Vec3> lbs_deform(const SkinnedMesh& mesh,
                             std::span<const RigidTransform> transforms,
                             std::size_t threads = 1);

// Same kernel writing into caller storage (out.size() == vertex count).
void lbs_deform_into(const SkinnedMesh& mesh,
                     std::span<const AffineTransform> transforms,
                     std::span<Vec3> out, std::size_t threads = 1);

// LBS positions of `clip` at time t (rest globals precomputed).
std::vector<Vec3> lbs_positions_at(const SkinnedMesh& mesh,
                                   const Skeleton& skeleton,
                                   std::span<const RigidTransform> rest_globals,
                                   const AnimationClip& clip, double t);

// (lbs(t + dt) − lbs(t)) / dt. Throws NonPositiveDt.
std::vector<Vec3> vertex_velocity_oracle(const SkinnedMesh& mesh,
                                         const Skeleton& skeleton,
                                         const AnimationClip& clip, double t,
                                         double dt);

// Flat-shading normals of the deformed surface, area weighted.
std::vector<Vec3> vertex_normals(std::span<const Vec3> positions,
                                 std::span<const Triangle> triangles);

}  // namespace vskin
