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

// Scene files (JSON), OBJ geometry import and per-frame OBJ export.
//
// Scene layout, version 1:
//
//   {
//     "version": 1,
//     "skeleton": {"bones": [{"name", "parent_index", "rest_rotation": [w,x,y,z],
//                             "rest_translation": [x,y,z]}, ...]},
//     "mesh": {"positions": [[x,y,z], ...], "triangles": [[a,b,c], ...],
//              "weights": [[[bone, w], ...], ...]},
//     "clips": [{"name", "duration", "loop",
//                "tracks": [{"bone", "keys": [{"time", "rotation", "translation"}]}]}],
//     "vs_params": {"k_squash": [...], "k_floppy": [...], "theta_max": null | rad,
//                   "bones": [{"squash", "floppy", "rotation_gain",
//                              "translation_gain", "squash_mode": "axis" | "point",
//                              "centroid_offset": [x,y,z]}, ...]},
//     "precomputed": {"phi": [[[bone, φ], ...], ...], "psi": ..., "masses": [...],
//                     "centroids": [[x,y,z], ...]}
//   }
//
// Angles are radians, times seconds, quaternions [w,x,y,z]. "clips",
// "vs_params" and "precomputed" are optional; so are rest transforms and key
// rotations/translations (identity). Doubles are written in shortest
// round-trip form, so save followed by load is bit-exact.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vskin/kinematics.hpp"
#include "vskin/rig.hpp"
#include "vskin/velocity_skinning.hpp"

namespace vskin {

inline constexpr int kSceneFormatVersion = 1;

struct Precomputed {
  WeightRows phi;
  WeightRows psi;
  std::vector<double> masses;
  std::vector<Vec3> centroids;

  friend bool operator==(const Precomputed&, const Precomputed&) = default;
};

struct SceneFile {
  int version = kSceneFormatVersion;
  Skeleton skeleton;
  SkinnedMesh mesh;
  std::vector<AnimationClip> clips;
  VsParams vs_params;
  std::optional<Precomputed> precomputed;

  // Throws InvalidArgument naming the available clips.
  const AnimationClip& clip(std::string_view name) const;
};

// Parses and validates a scene. Weight rows off by more than
// kWeightSumTolerance are renormalized and reported in `warnings`.
// Throws ParseError (with line or field path), VersionMismatch,
// ReferentialIntegrity, or the rig validation errors.
SceneFile parse_scene(std::string_view text,
                      std::vector<std::string>* warnings = nullptr);
SceneFile load_scene(const std::filesystem::path& path,
                     std::vector<std::string>* warnings = nullptr);

std::string serialize_scene(const SceneFile& scene);
void save_scene(const SceneFile& scene, const std::filesystem::path& path);

// Fills every per-model derived section. Recomputed from scratch, so running
// it on an already-precomputed scene returns identical data.
SceneFile precompute_model(SceneFile scene);

// Run-time model; uses the scene's precomputed φ/ψ/masses/centroids when
// present instead of recomputing them.
RigModel make_model(const SceneFile& scene);

struct ObjGeometry {
  std::vector<Vec3> positions;
  std::vector<Triangle> triangles;
};

// `v` and `f` records only; polygons are fan-triangulated, `f a/b/c` and
// negative indices accepted. Throws ParseError / IoError.
ObjGeometry parse_obj(std::string_view text);
ObjGeometry load_obj(const std::filesystem::path& path);

std::string format_obj(std::span<const Vec3> positions,
                       std::span<const Triangle> triangles);

struct BakeOutput {
  double fps = 30.0;
  std::vector<std::vector<Vec3>> frames;
  // Per frame, per vertex ‖d_u‖; empty for LBS-only bakes.
  std::vector<std::vector<double>> displacement_magnitudes;
};

// Frames at t = k / fps for k = 0 .. floor(duration · fps + 1e-9).
std::size_t bake_frame_count(double duration, double fps);

// Writes dir/frame_000000.obj, ... and returns the written paths.
std::vector<std::filesystem::path> export_obj_sequence(
    const BakeOutput& bake, std::span<const Triangle> triangles,
    const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace vskin
