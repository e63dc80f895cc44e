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

// Skeleton, skinned mesh and the per-model pre-processing: upward/downward
// weight propagation, vertex masses and per-bone centroids.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vskin/geometry.hpp"

namespace vskin {

struct Bone {
  std::string name;
  int parent = -1;  // -1 for the root
  RigidTransform rest_local;
};

// Bones are topologically sorted: every parent precedes its children.
struct Skeleton {
  std::vector<Bone> bones;

  std::size_t size() const { return bones.size(); }
};

// Throws CyclicHierarchy, NoRoot, MultipleRoots or ForwardParentReference.
void validate_skeleton(const Skeleton& skeleton);

// Global rest transform of every bone: parent_global ∘ rest_local.
std::vector<RigidTransform> rest_global_transforms(const Skeleton& skeleton);

struct BoneWeight {
  int bone = 0;
  double weight = 0.0;

  friend bool operator==(const BoneWeight&, const BoneWeight&) = default;
};

// Sparse per-vertex row, sorted by bone index, one entry per bone.
using WeightRow = std::vector<BoneWeight>;
using WeightRows = std::vector<WeightRow>;

using Triangle = std::array<std::uint32_t, 3>;

struct SkinnedMesh {
  std::vector<Vec3> rest_positions;
  std::vector<Triangle> triangles;
  WeightRows weights;  // LBS weights, one row per vertex

  std::size_t vertex_count() const { return rest_positions.size(); }
};

// Tolerance on |Σ_i w_ui − 1| before a row is renormalized.
inline constexpr double kWeightSumTolerance = 1e-6;

// Checks indices, sizes, weight signs and finiteness. Rows are expected to
// be normalized (see normalize_weights). Throws InvalidMesh.
void validate_mesh(const SkinnedMesh& mesh, std::size_t bone_count);

// Sorts rows by bone, merges duplicate bone entries, drops zeros and
// rescales rows whose sum is off by more than kWeightSumTolerance. Returns
// the indices of the rescaled vertices. Throws InvalidMesh for a row with
// no positive weight.
std::vector<std::size_t> normalize_weights(SkinnedMesh& mesh);

// φ_ui = Σ_{j ∈ subtree(i)} w_uj. Denser than the LBS rows: every ancestor
// of a weighted bone appears, and the root always has φ = 1.
WeightRows propagate_weights_upward(const SkinnedMesh& mesh,
                                    const Skeleton& skeleton);

// ψ_ui = Σ_{j ∈ path(root, i)} w_uj.
WeightRows propagate_weights_downward(const SkinnedMesh& mesh,
                                      const Skeleton& skeleton);

// Voronoi-style lumped area: one third of each incident triangle's area.
std::vector<double> compute_vertex_masses(const SkinnedMesh& mesh);

// Mass-weighted barycenter of each bone's downward-propagated region.
// Bones whose Σ ψ m <= kEpsilon fall back to `fallback_origins[i]`.
std::vector<Vec3> compute_bone_centroids(const SkinnedMesh& mesh,
                                         const WeightRows& psi,
                                         std::span<const double> masses,
                                         std::span<const Vec3> fallback_origins);

enum class SquashMode { kAxis, kPoint };

// Rest-pose geometry of a bone used by the squash deformer. The medial axis
// runs from the centroid to the bone origin.
struct BoneGeometry {
  Vec3 centroid;
  Vec3 origin;
  Vec3 centroid_offset;  // bone-local frame
  SquashMode squash_mode = SquashMode::kAxis;
};

struct PosedBoneGeometry {
  Vec3 centroid;  // offset included
  Vec3 origin;
  SquashMode squash_mode = SquashMode::kAxis;

  bool has_medial_axis() const {
    return squash_mode == SquashMode::kAxis &&
           norm(centroid - origin) > kEpsilon;
  }
};

// Maps each bone's rest centroid and origin through posed ∘ rest⁻¹. The
// centroid offset is bone-local, so it follows the bone's posed rotation.
std::vector<PosedBoneGeometry> posed_bone_geometry(
    std::span<const RigidTransform> rest_globals,
    std::span<const RigidTransform> posed_globals,
    std::span<const BoneGeometry> rest);

// Per-model data prepared once and shared read-only at run time.
struct RigModel {
  Skeleton skeleton;
  SkinnedMesh mesh;
  std::vector<RigidTransform> rest_globals;
  WeightRows phi;  // upward-propagated
  WeightRows psi;  // downward-propagated
  std::vector<double> masses;
  std::vector<Vec3> centroids;  // rest pose, without user offsets
};

// Validates skeleton and mesh, then computes every derived quantity.
RigModel prepare_model(Skeleton skeleton, SkinnedMesh mesh);

}  // namespace vskin
