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

#include "vskin/procedural.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vskin/error.hpp"

namespace vskin {

namespace {

constexpr double kBodyRadius = 0.5;
constexpr std::uint32_t kBodyRings = 16;
constexpr std::uint32_t kBodySegments = 24;
constexpr std::uint32_t kTubeSegments = 32;

std::uint32_t add_vertex(SkinnedMesh& mesh, const Vec3& p, WeightRow row) {
  mesh.rest_positions.push_back(p);
  mesh.weights.push_back(std::move(row));
  return static_cast<std::uint32_t>(mesh.rest_positions.size() - 1);
}

// Latitude-longitude sphere without pole vertices; closed with fans.
void add_body(SkinnedMesh& mesh) {
  const double pi = std::numbers::pi;
  const std::uint32_t first = static_cast<std::uint32_t>(mesh.vertex_count());
  for (std::uint32_t r = 0; r < kBodyRings; ++r) {
    const double lat = pi * (static_cast<double>(r) + 1.0) / (kBodyRings + 1.0);
    for (std::uint32_t s = 0; s < kBodySegments; ++s) {
      const double lon = 2.0 * pi * s / kBodySegments;
      add_vertex(mesh,
                 kBodyRadius * Vec3{std::sin(lat) * std::cos(lon), std::cos(lat),
                                    std::sin(lat) * std::sin(lon)},
                 {{0, 1.0}});
    }
  }
  const auto at = [&](std::uint32_t r, std::uint32_t s) {
    return first + r * kBodySegments + s % kBodySegments;
  };
  for (std::uint32_t r = 0; r + 1 < kBodyRings; ++r) {
    for (std::uint32_t s = 0; s < kBodySegments; ++s) {
      mesh.triangles.push_back({at(r, s), at(r, s + 1), at(r + 1, s)});
      mesh.triangles.push_back({at(r, s + 1), at(r + 1, s + 1), at(r + 1, s)});
    }
  }
  const std::uint32_t top =
      add_vertex(mesh, {0.0, kBodyRadius, 0.0}, {{0, 1.0}});
  const std::uint32_t bottom =
      add_vertex(mesh, {0.0, -kBodyRadius, 0.0}, {{0, 1.0}});
  for (std::uint32_t s = 0; s < kBodySegments; ++s) {
    mesh.triangles.push_back({top, at(0, s + 1), at(0, s)});
    mesh.triangles.push_back(
        {bottom, at(kBodyRings - 1, s), at(kBodyRings - 1, s + 1)});
  }
}

// Blend weights along a chain: rigid in the middle of each bone, linear
// across a band of half-width 0.25 segment around each joint.
WeightRow chain_weights(double x, double segment, int first_bone,
                        std::size_t bones) {
  const double u = x / segment;
  const auto joint = static_cast<std::size_t>(std::lround(u));
  const double band = 0.25;
  if (joint >= 1 && joint < bones && std::abs(u - joint) < band) {
    const double t = (u - (static_cast<double>(joint) - band)) / (2.0 * band);
    const int before = first_bone + static_cast<int>(joint) - 1;
    return {{before, 1.0 - t}, {before + 1, t}};
  }
  const auto bone = std::min<std::size_t>(static_cast<std::size_t>(u), bones - 1);
  return {{first_bone + static_cast<int>(bone), 1.0}};
}

}  // namespace

SceneFile make_creature_scene(const CreatureSpec& spec) {
  if (spec.tentacles == 0 || spec.bones_per_tentacle == 0 ||
      spec.keys_per_track < 2 || !(spec.clip_duration > 0.0) ||
      !(spec.tentacle_length > 0.0) || !(spec.tentacle_radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid creature description");
  }
  const double pi = std::numbers::pi;
  SceneFile scene;
  Skeleton& skeleton = scene.skeleton;
  SkinnedMesh& mesh = scene.mesh;

  skeleton.bones.push_back({"body", -1, {}});
  add_body(mesh);

  const std::size_t body_vertices = mesh.vertex_count();
  const std::size_t per_tentacle =
      spec.target_vertices > body_vertices
          ? (spec.target_vertices - body_vertices) / spec.tentacles
          : kTubeSegments * 2;
  const auto rings = static_cast<std::uint32_t>(
      std::max<std::size_t>(2, per_tentacle / kTubeSegments));
  const double segment =
      spec.tentacle_length / static_cast<double>(spec.bones_per_tentacle);

  AnimationClip clip;
  clip.name = "swim";
  clip.duration = spec.clip_duration;
  clip.loop = true;

  for (std::size_t t = 0; t < spec.tentacles; ++t) {
    const double heading = 2.0 * pi * static_cast<double>(t) /
                           static_cast<double>(spec.tentacles);
    const Vec3 dir{std::cos(heading), 0.0, std::sin(heading)};
    const RigidTransform base{quat_from_axis_angle({0.0, 1.0, 0.0}, -heading),
                              kBodyRadius * dir};
    const int first_bone = static_cast<int>(skeleton.size());
    for (std::size_t b = 0; b < spec.bones_per_tentacle; ++b) {
      Bone bone;
      bone.name = "tentacle" + std::to_string(t) + "_" + std::to_string(b);
      bone.parent = b == 0 ? 0 : static_cast<int>(skeleton.size()) - 1;
      bone.rest_local = b == 0 ? base : RigidTransform{{}, {segment, 0.0, 0.0}};
      skeleton.bones.push_back(std::move(bone));

      BoneTrack track;
      track.bone = static_cast<int>(skeleton.size()) - 1;
      const double phase = 0.9 * static_cast<double>(t) + 0.6 * static_cast<double>(b);
      const Vec3 axis = normalized(Vec3{0.0, 0.4 * std::sin(phase), 1.0});
      for (std::size_t k = 0; k < spec.keys_per_track; ++k) {
        const double s = static_cast<double>(k) /
                         static_cast<double>(spec.keys_per_track - 1);
        const double angle = 0.5 * std::sin(2.0 * pi * s + phase);
        track.keys.push_back({s * spec.clip_duration,
                              quat_from_axis_angle(axis, angle), {}});
      }
      clip.tracks.push_back(std::move(track));
    }

    const std::uint32_t first = static_cast<std::uint32_t>(mesh.vertex_count());
    for (std::uint32_t r = 0; r < rings; ++r) {
      const double x = spec.tentacle_length * r / (rings - 1);
      const double radius = spec.tentacle_radius * (1.0 - 0.6 * x / spec.tentacle_length);
      const WeightRow row =
          chain_weights(x, segment, first_bone, spec.bones_per_tentacle);
      for (std::uint32_t s = 0; s < kTubeSegments; ++s) {
        const double a = 2.0 * pi * s / kTubeSegments;
        const Vec3 local{x, radius * std::cos(a), radius * std::sin(a)};
        add_vertex(mesh, base.apply(local), row);
      }
    }
    for (std::uint32_t r = 0; r + 1 < rings; ++r) {
      for (std::uint32_t s = 0; s < kTubeSegments; ++s) {
        const std::uint32_t s1 = (s + 1) % kTubeSegments;
        const std::uint32_t a = first + r * kTubeSegments + s;
        const std::uint32_t b = first + r * kTubeSegments + s1;
        const std::uint32_t c = first + (r + 1) * kTubeSegments + s;
        const std::uint32_t d = first + (r + 1) * kTubeSegments + s1;
        mesh.triangles.push_back({a, c, b});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }

  scene.clips.push_back(std::move(clip));
  scene.vs_params = VsParams::defaults(mesh.vertex_count(), skeleton.size());
  std::fill(scene.vs_params.k_squash.begin(), scene.vs_params.k_squash.end(),
            spec.k_squash);
  std::fill(scene.vs_params.k_floppy.begin(), scene.vs_params.k_floppy.end(),
            spec.k_floppy);
  return scene;
}

}  // namespace vskin
