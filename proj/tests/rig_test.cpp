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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "vskin/error.hpp"
#include "vskin/rig.hpp"

namespace vskin {
namespace {

using testing::weight_of;

ErrorCode SkeletonError(const Skeleton& s) {
  try {
    validate_skeleton(s);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kInvalidArgument;
}

TEST(SkeletonTest, SingleRootIsValid) {
  Skeleton s;
  s.bones = {{"root", -1, {}}};
  EXPECT_NO_THROW(validate_skeleton(s));
}

TEST(SkeletonTest, SelfParentIsCyclic) {
  Skeleton s;
  s.bones = {{"root", -1, {}}, {"loop", 1, {}}};
  EXPECT_EQ(SkeletonError(s), ErrorCode::kCyclicHierarchy);
}

TEST(SkeletonTest, TwoRoots) {
  Skeleton s;
  s.bones = {{"a", -1, {}}, {"b", -1, {}}};
  EXPECT_EQ(SkeletonError(s), ErrorCode::kMultipleRoots);
}

TEST(SkeletonTest, ParentAfterChild) {
  Skeleton s;
  s.bones = {{"root", -1, {}}, {"child", 2, {}}, {"late", 0, {}}};
  EXPECT_EQ(SkeletonError(s), ErrorCode::kForwardParentReference);
}

TEST(SkeletonTest, EmptyHasNoRoot) {
  EXPECT_EQ(SkeletonError({}), ErrorCode::kNoRoot);
}

TEST(PropagationTest, ChainUpward) {
  const SceneFile s = testing::chain_scene();
  const WeightRows phi = propagate_weights_upward(s.mesh, s.skeleton);
  EXPECT_DOUBLE_EQ(weight_of(phi[0], 2), 0.5);
  EXPECT_DOUBLE_EQ(weight_of(phi[0], 1), 1.0);
  EXPECT_DOUBLE_EQ(weight_of(phi[0], 0), 1.0);
}

TEST(PropagationTest, SingleBone) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{0, 0, 0}};
  mesh.weights = {{{0, 1.0}}};
  Skeleton s;
  s.bones = {{"root", -1, {}}};
  const WeightRows phi = propagate_weights_upward(mesh, s);
  ASSERT_EQ(phi[0].size(), 1u);
  EXPECT_EQ(phi[0][0], (BoneWeight{0, 1.0}));
}

TEST(PropagationTest, BranchUpward) {
  const SceneFile s = testing::branch_scene();
  const WeightRows phi = propagate_weights_upward(s.mesh, s.skeleton);
  EXPECT_DOUBLE_EQ(weight_of(phi[0], 1), 0.7);
  EXPECT_DOUBLE_EQ(weight_of(phi[0], 2), 0.3);
  EXPECT_DOUBLE_EQ(weight_of(phi[0], 0), 1.0);
}

TEST(PropagationTest, ChainDownward) {
  const SceneFile s = testing::chain_scene();
  const WeightRows psi = propagate_weights_downward(s.mesh, s.skeleton);
  EXPECT_DOUBLE_EQ(weight_of(psi[0], 0), 0.0);
  EXPECT_DOUBLE_EQ(weight_of(psi[0], 1), 0.5);
  EXPECT_DOUBLE_EQ(weight_of(psi[0], 2), 1.0);
  // all weight on the root flows down the whole chain
  for (int b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(weight_of(psi[1], b), 1.0);
}

TEST(PropagationTest, RandomScenesMatchBruteForce) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SceneFile s = testing::random_scene(seed);
    const std::size_t nb = s.skeleton.size();
    const WeightRows phi = propagate_weights_upward(s.mesh, s.skeleton);
    const WeightRows psi = propagate_weights_downward(s.mesh, s.skeleton);
    const auto is_ancestor_or_self = [&](std::size_t a, std::size_t b) {
      for (int c = static_cast<int>(b); c != -1; c = s.skeleton.bones[c].parent) {
        if (c == static_cast<int>(a)) return true;
      }
      return false;
    };
    for (std::size_t u = 0; u < s.mesh.vertex_count(); ++u) {
      EXPECT_NEAR(weight_of(phi[u], 0), 1.0, 1e-12);
      for (std::size_t i = 0; i < nb; ++i) {
        double up = 0.0;
        double down = 0.0;
        for (const BoneWeight& w : s.mesh.weights[u]) {
          const auto j = static_cast<std::size_t>(w.bone);
          if (is_ancestor_or_self(i, j)) up += w.weight;
          if (is_ancestor_or_self(j, i)) down += w.weight;
        }
        EXPECT_NEAR(weight_of(phi[u], static_cast<int>(i)), up, 1e-12);
        EXPECT_NEAR(weight_of(psi[u], static_cast<int>(i)), down, 1e-12);
      }
    }
  }
}

TEST(MassTest, TriangleAreaSplitsInThirds) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{0, 0, 0}, {3, 0, 0}, {0, 2, 0}, {5, 5, 5}};
  mesh.triangles = {{0, 1, 2}};
  const auto m = compute_vertex_masses(mesh);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 1.0);
  EXPECT_DOUBLE_EQ(m[2], 1.0);
  EXPECT_EQ(m[3], 0.0);
}

TEST(MassTest, UnitSquareSumsToArea) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  const auto m = compute_vertex_masses(mesh);
  EXPECT_NEAR(m[0] + m[1] + m[2] + m[3], 1.0, 1e-15);
}

TEST(CentroidTest, SymmetricPair) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{0, 0, 0}, {2, 0, 0}};
  const WeightRows psi = {{{0, 1.0}}, {{0, 1.0}}};
  const std::vector<double> masses = {1.0, 1.0};
  const std::vector<Vec3> fallback = {{9, 9, 9}};
  const auto c = compute_bone_centroids(mesh, psi, masses, fallback);
  EXPECT_EQ(c[0], (Vec3{1, 0, 0}));
}

TEST(CentroidTest, SingleSupportingVertex) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{0, 0, 0}, {2, 3, 4}};
  const WeightRows psi = {{}, {{0, 0.25}}};
  const std::vector<double> masses = {1.0, 2.0};
  const auto c = compute_bone_centroids(mesh, psi, masses, std::vector<Vec3>{{}});
  EXPECT_NEAR(c[0].x, 2.0, 1e-15);
  EXPECT_NEAR(c[0].y, 3.0, 1e-15);
  EXPECT_NEAR(c[0].z, 4.0, 1e-15);
}

TEST(CentroidTest, NoSupportFallsBack) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{1, 1, 1}};
  const WeightRows psi = {{{0, 1.0}}};
  const std::vector<double> masses = {0.0};
  const auto c = compute_bone_centroids(mesh, psi, masses, std::vector<Vec3>{{0, 5, 0}, {7, 0, 0}});
  EXPECT_EQ(c[1], (Vec3{7, 0, 0}));
}

TEST(CentroidTest, RandomMeshMatchesWeightedAverage) {
  const SceneFile s = testing::random_scene(42);
  const RigModel model = prepare_model(s.skeleton, s.mesh);
  for (std::size_t i = 0; i < s.skeleton.size(); ++i) {
    Vec3 sum;
    double total = 0.0;
    for (std::size_t u = 0; u < s.mesh.vertex_count(); ++u) {
      const double w = weight_of(model.psi[u], static_cast<int>(i)) * model.masses[u];
      sum += w * s.mesh.rest_positions[u];
      total += w;
    }
    if (total <= kEpsilon) continue;
    const Vec3 c = sum / total;
    EXPECT_NEAR(model.centroids[i].x, c.x, 1e-12);
    EXPECT_NEAR(model.centroids[i].y, c.y, 1e-12);
    EXPECT_NEAR(model.centroids[i].z, c.z, 1e-12);
  }
}

TEST(NormalizeTest, RescalesAndReports) {
  SkinnedMesh mesh;
  mesh.rest_positions = {{0, 0, 0}, {1, 0, 0}};
  mesh.weights = {{{0, 0.5}, {1, 0.3}}, {{0, 1.0}}};
  const auto changed = normalize_weights(mesh);
  ASSERT_EQ(changed.size(), 1u);
  EXPECT_EQ(changed[0], 0u);
  EXPECT_NEAR(weight_of(mesh.weights[0], 0), 0.625, 1e-15);
  EXPECT_NEAR(weight_of(mesh.weights[0], 1), 0.375, 1e-15);
}

TEST(PosedGeometryTest, IdentityPoseKeepsRest) {
  const std::vector<RigidTransform> rest = {{}, {{}, {1, 0, 0}}};
  const std::vector<BoneGeometry> geom = {{{0.5, 0, 0}, {0, 0, 0}, {}, SquashMode::kAxis},
                                          {{1.5, 0, 0}, {1, 0, 0}, {}, SquashMode::kAxis}};
  const auto posed = posed_bone_geometry(rest, rest, geom);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(posed[i].centroid, geom[i].centroid);
    EXPECT_EQ(posed[i].origin, geom[i].origin);
  }
}

TEST(PosedGeometryTest, RootTranslationShiftsAll) {
  const std::vector<RigidTransform> rest = {{}, {{}, {1, 0, 0}}};
  const Vec3 t{0.25, -1, 2};
  const std::vector<RigidTransform> posed_globals = {{{}, t}, {{}, Vec3{1, 0, 0} + t}};
  const std::vector<BoneGeometry> geom = {{{0.5, 0, 0}, {0, 0, 0}, {}, SquashMode::kAxis},
                                          {{1.5, 0.2, 0}, {1, 0, 0}, {}, SquashMode::kAxis}};
  const auto posed = posed_bone_geometry(rest, posed_globals, geom);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(posed[i].centroid, geom[i].centroid + t);
    EXPECT_EQ(posed[i].origin, geom[i].origin + t);
  }
}

TEST(PosedGeometryTest, JointRotationCarriesSubtree) {
  const double half_pi = std::numbers::pi / 2;
  const std::vector<RigidTransform> rest = {{}, {{}, {1, 0, 0}}};
  const Quat q = quat_from_axis_angle({0, 0, 1}, half_pi);
  const std::vector<RigidTransform> posed_globals = {{}, {q, {1, 0, 0}}};
  const std::vector<BoneGeometry> geom = {{{0.5, 0, 0}, {0, 0, 0}, {}, SquashMode::kAxis},
                                          {{2, 0, 0}, {1, 0, 0}, {0, 0, 0.5}, SquashMode::kAxis}};
  const auto posed = posed_bone_geometry(rest, posed_globals, geom);
  EXPECT_NEAR(posed[1].centroid.x, 1.0, 1e-15);
  EXPECT_NEAR(posed[1].centroid.y, 1.0, 1e-15);
  EXPECT_NEAR(posed[1].centroid.z, 0.5, 1e-15);
  EXPECT_EQ(posed[0].centroid, geom[0].centroid);
}

}  // namespace
}  // namespace vskin
