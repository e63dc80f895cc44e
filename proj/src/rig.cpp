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

#include "vskin/rig.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vskin/error.hpp"

namespace vskin {

namespace {

std::string bone_label(const Skeleton& s, std::size_t i) {
  std::string label = "bone " + std::to_string(i);
  if (!s.bones[i].name.empty()) label += " ('" + s.bones[i].name + "')";
  return label;
}

WeightRow dense_to_row(const std::vector<double>& dense) {
  WeightRow row;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) row.push_back({static_cast<int>(i), dense[i]});
  }
  return row;
}

}  // namespace

void validate_skeleton(const Skeleton& s) {
  const std::size_t n = s.size();
  if (n == 0) throw Error(ErrorCode::kNoRoot, "skeleton has no bones");

  for (std::size_t i = 0; i < n; ++i) {
    const int p = s.bones[i].parent;
    if (p < -1 || p >= static_cast<int>(n)) {
      throw Error(ErrorCode::kForwardParentReference,
                  bone_label(s, i) + " references missing parent " +
                      std::to_string(p));
    }
  }

  // Walk every parent chain; a chain longer than n revisits a bone.
  for (std::size_t i = 0; i < n; ++i) {
    int cur = static_cast<int>(i);
    std::size_t steps = 0;
    while (cur != -1) {
      cur = s.bones[static_cast<std::size_t>(cur)].parent;
      if (++steps > n) {
        throw Error(ErrorCode::kCyclicHierarchy,
                    bone_label(s, i) + " is part of a parent cycle");
      }
    }
  }

  std::size_t roots = 0;
  for (const Bone& b : s.bones) roots += b.parent == -1 ? 1 : 0;
  if (roots == 0) throw Error(ErrorCode::kNoRoot, "skeleton has no root");
  if (roots > 1) {
    throw Error(ErrorCode::kMultipleRoots,
                std::to_string(roots) + " bones have parent -1");
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (s.bones[i].parent >= static_cast<int>(i)) {
      throw Error(ErrorCode::kForwardParentReference,
                  bone_label(s, i) + " precedes its parent " +
                      std::to_string(s.bones[i].parent));
    }
  }
}

std::vector<RigidTransform> rest_global_transforms(const Skeleton& s) {
  std::vector<RigidTransform> globals(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Bone& b = s.bones[i];
    globals[i] = b.parent < 0
                     ? b.rest_local
                     : compose(globals[static_cast<std::size_t>(b.parent)],
                               b.rest_local);
  }
  return globals;
}

void validate_mesh(const SkinnedMesh& mesh, std::size_t bone_count) {
  const std::size_t nv = mesh.vertex_count();
  if (mesh.weights.size() != nv) {
    throw Error(ErrorCode::kInvalidMesh,
                "weight rows (" + std::to_string(mesh.weights.size()) +
                    ") do not match vertex count (" + std::to_string(nv) + ")");
  }
  for (std::size_t u = 0; u < nv; ++u) {
    if (!is_finite(mesh.rest_positions[u])) {
      throw Error(ErrorCode::kInvalidMesh,
                  "vertex " + std::to_string(u) + " is not finite");
    }
    double sum = 0.0;
    for (const BoneWeight& bw : mesh.weights[u]) {
      if (bw.bone < 0 || static_cast<std::size_t>(bw.bone) >= bone_count) {
        throw Error(ErrorCode::kInvalidMesh,
                    "vertex " + std::to_string(u) + " references bone " +
                        std::to_string(bw.bone));
      }
      if (!std::isfinite(bw.weight) || bw.weight < 0.0) {
        throw Error(ErrorCode::kInvalidMesh,
                    "vertex " + std::to_string(u) + " has a negative weight");
      }
      sum += bw.weight;
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      throw Error(ErrorCode::kInvalidMesh,
                  "weights of vertex " + std::to_string(u) + " sum to " +
                      std::to_string(sum));
    }
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (std::uint32_t idx : mesh.triangles[t]) {
      if (idx >= nv) {
        throw Error(ErrorCode::kInvalidMesh,
                    "triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(idx));
      }
    }
  }
}

std::vector<std::size_t> normalize_weights(SkinnedMesh& mesh) {
  std::vector<std::size_t> rescaled;
  for (std::size_t u = 0; u < mesh.weights.size(); ++u) {
    WeightRow& row = mesh.weights[u];
    std::sort(row.begin(), row.end(),
              [](const BoneWeight& a, const BoneWeight& b) {
                return a.bone < b.bone;
              });
    WeightRow merged;
    for (const BoneWeight& bw : row) {
      if (!merged.empty() && merged.back().bone == bw.bone) {
        merged.back().weight += bw.weight;
      } else {
        merged.push_back(bw);
      }
    }
    std::erase_if(merged, [](const BoneWeight& bw) { return bw.weight == 0.0; });

    double sum = 0.0;
    for (const BoneWeight& bw : merged) sum += bw.weight;
    if (!(sum > 0.0)) {
      throw Error(ErrorCode::kInvalidMesh,
                  "vertex " + std::to_string(u) + " has no positive weight");
    }
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      for (BoneWeight& bw : merged) bw.weight /= sum;
      rescaled.push_back(u);
    }
    row = std::move(merged);
  }
  return rescaled;
}

WeightRows propagate_weights_upward(const SkinnedMesh& mesh,
                                    const Skeleton& s) {
  const std::size_t nb = s.size();
  WeightRows phi(mesh.vertex_count());
  std::vector<double> dense(nb);
  for (std::size_t u = 0; u < mesh.vertex_count(); ++u) {
    std::fill(dense.begin(), dense.end(), 0.0);
    for (const BoneWeight& bw : mesh.weights[u]) {
      dense[static_cast<std::size_t>(bw.bone)] += bw.weight;
    }
    // Children come after parents, so a reverse sweep accumulates subtrees.
    for (std::size_t i = nb; i-- > 1;) {
      const int p = s.bones[i].parent;
      if (p >= 0) dense[static_cast<std::size_t>(p)] += dense[i];
    }
    phi[u] = dense_to_row(dense);
  }
  return phi;
}

WeightRows propagate_weights_downward(const SkinnedMesh& mesh,
                                      const Skeleton& s) {
  const std::size_t nb = s.size();
  WeightRows psi(mesh.vertex_count());
  std::vector<double> dense(nb);
  for (std::size_t u = 0; u < mesh.vertex_count(); ++u) {
    std::fill(dense.begin(), dense.end(), 0.0);
    for (const BoneWeight& bw : mesh.weights[u]) {
      dense[static_cast<std::size_t>(bw.bone)] += bw.weight;
    }
    for (std::size_t i = 0; i < nb; ++i) {
      const int p = s.bones[i].parent;
      if (p >= 0) dense[i] += dense[static_cast<std::size_t>(p)];
    }
    psi[u] = dense_to_row(dense);
  }
  return psi;
}

std::vector<double> compute_vertex_masses(const SkinnedMesh& mesh) {
  std::vector<double> masses(mesh.vertex_count(), 0.0);
  for (const Triangle& t : mesh.triangles) {
    const Vec3& a = mesh.rest_positions[t[0]];
    const Vec3& b = mesh.rest_positions[t[1]];
    const Vec3& c = mesh.rest_positions[t[2]];
    const double third = norm(cross(b - a, c - a)) / 6.0;
    for (std::uint32_t idx : t) masses[idx] += third;
  }
  return masses;
}

std::vector<Vec3> compute_bone_centroids(const SkinnedMesh& mesh,
                                         const WeightRows& psi,
                                         std::span<const double> masses,
                                         std::span<const Vec3> fallback) {
  const std::size_t nb = fallback.size();
  std::vector<Vec3> weighted_sum(nb);
  std::vector<double> total(nb, 0.0);
  for (std::size_t u = 0; u < mesh.vertex_count(); ++u) {
    for (const BoneWeight& bw : psi[u]) {
      const double wm = bw.weight * masses[u];
      const auto i = static_cast<std::size_t>(bw.bone);
      weighted_sum[i] += wm * mesh.rest_positions[u];
      total[i] += wm;
    }
  }
  std::vector<Vec3> centroids(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    centroids[i] = total[i] > kEpsilon ? weighted_sum[i] / total[i]
                                       : fallback[i];
  }
  return centroids;
}

std::vector<PosedBoneGeometry> posed_bone_geometry(
    std::span<const RigidTransform> rest_globals,
    std::span<const RigidTransform> posed_globals,
    std::span<const BoneGeometry> rest) {
  std::vector<PosedBoneGeometry> posed(rest.size());
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const RigidTransform& g = posed_globals[i];
    const RigidTransform skin = compose(g, inverse(rest_globals[i]));
    posed[i].origin = skin.apply(rest[i].origin);
    posed[i].centroid = skin.apply(rest[i].centroid) +
                        rotate(g.rotation, rest[i].centroid_offset);
    posed[i].squash_mode = rest[i].squash_mode;
  }
  return posed;
}

RigModel prepare_model(Skeleton skeleton, SkinnedMesh mesh) {
  validate_skeleton(skeleton);
  validate_mesh(mesh, skeleton.size());
  RigModel model;
  model.rest_globals = rest_global_transforms(skeleton);
  model.phi = propagate_weights_upward(mesh, skeleton);
  model.psi = propagate_weights_downward(mesh, skeleton);
  model.masses = compute_vertex_masses(mesh);
  std::vector<Vec3> origins(skeleton.size());
  for (std::size_t i = 0; i < origins.size(); ++i) {
    origins[i] = model.rest_globals[i].translation;
  }
  model.centroids =
      compute_bone_centroids(mesh, model.psi, model.masses, origins);
  model.skeleton = std::move(skeleton);
  model.mesh = std::move(mesh);
  return model;
}

}  // namespace vskin
