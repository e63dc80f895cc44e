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

#include "vskin/lbs.hpp"

#include <string>

#include "vskin/error.hpp"
#include "vskin/parallel.hpp"

namespace vskin {

SkinningMatrices skinning_matrices(std::span<const RigidTransform> posed,
                                   std::span<const RigidTransform> rest) {
  SkinningMatrices out(posed.size());
  for (std::size_t i = 0; i < posed.size(); ++i) {
    out[i] = compose(posed[i], inverse(rest[i]));
  }
  return out;
}

std::vector<AffineTransform> to_affine(std::span<const RigidTransform> transforms) {
  std::vector<AffineTransform> out(transforms.size());
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    out[i] = {to_matrix(transforms[i].rotation), transforms[i].translation};
  }
  return out;
}

void lbs_deform_into(const SkinnedMesh& mesh,
                     std::span<const AffineTransform> transforms,
                     std::span<Vec3> out, std::size_t threads) {
  parallel_for(mesh.vertex_count(), threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t u = begin; u < end; ++u) {
                   const Vec3& rest = mesh.rest_positions[u];
                   Vec3 p;
                   for (const BoneWeight& bw : mesh.weights[u]) {
                     p += bw.weight *
                          transforms[static_cast<std::size_t>(bw.bone)].apply(rest);
                   }
                   out[u] = p;
                 }
               });
}

std::vector<Vec3> lbs_deform(const SkinnedMesh& mesh,
                             std::span<const RigidTransform> transforms,
                             std::size_t threads) {
  std::vector<Vec3> out(mesh.vertex_count());
  const auto affine = to_affine(transforms);
  lbs_deform_into(mesh, affine, out, threads);
  return out;
}

std::vector<Vec3> lbs_positions_at(const SkinnedMesh& mesh,
                                   const Skeleton& skeleton,
                                   std::span<const RigidTransform> rest_globals,
                                   const AnimationClip& clip, double t) {
  const Pose pose = evaluate_pose(clip, skeleton.size(), t);
  const auto posed = forward_kinematics(skeleton, pose);
  return lbs_deform(mesh, skinning_matrices(posed, rest_globals));
}

std::vector<Vec3> vertex_velocity_oracle(const SkinnedMesh& mesh,
                                         const Skeleton& skeleton,
                                         const AnimationClip& clip, double t,
                                         double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDt,
                "finite-difference step must be positive, got " +
                    std::to_string(dt));
  }
  const auto rest = rest_global_transforms(skeleton);
  const auto p0 = lbs_positions_at(mesh, skeleton, rest, clip, t);
  const auto p1 = lbs_positions_at(mesh, skeleton, rest, clip, t + dt);
  std::vector<Vec3> v(p0.size());
  for (std::size_t u = 0; u < p0.size(); ++u) v[u] = (p1[u] - p0[u]) / dt;
  return v;
}

std::vector<Vec3> vertex_normals(std::span<const Vec3> positions,
                                 std::span<const Triangle> triangles) {
  std::vector<Vec3> normals(positions.size());
  for (const Triangle& t : triangles) {
    const Vec3 n = cross(positions[t[1]] - positions[t[0]],
                         positions[t[2]] - positions[t[0]]);
    for (std::uint32_t idx : t) normals[idx] += n;
  }
  for (Vec3& n : normals) {
    const double len = norm(n);
    if (len > 0.0) n = n / len;
  }
  return normals;
}

}  // namespace vskin
