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

// Library side of the command-line stages: bake, validate, bench and
// trajectory. The CLI only parses flags and does file I/O around these.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vskin/assets_io.hpp"

namespace vskin {

enum class BakeMode { kLbs, kVs };

struct BakeOptions {
  std::string clip;
  double fps = 30.0;
  double dt = 1e-4;  // finite-difference step for bone velocities
  BakeMode mode = BakeMode::kVs;
  std::size_t smooth_window = 1;
  std::optional<double> theta_max;  // overrides the scene's limiter
  std::size_t threads = 0;
};

// Frames at t = k / fps. Bone velocities come from the backward difference
// over [t − dt, t] (forward over [t, t + dt] when t − dt leaves a
// non-looping clip), averaged over the last `smooth_window` frames.
BakeOutput bake(const SceneFile& scene, const BakeOptions& options);

struct ValidateOptions {
  std::string clip;
  double dt = 1e-4;
  std::size_t samples = 16;
  double threshold = 1e-3;
};

struct ValidationSample {
  double time = 0.0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
};

struct ValidationReport {
  std::vector<ValidationSample> samples;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

// Per-vertex relative error |a − b| / max(|b|, 0.01 · max_v |b_v|, 1e-12);
// exactly zero when a == b.
std::vector<double> relative_errors(std::span<const Vec3> actual,
                                    std::span<const Vec3> reference);

// Sample times in (0, duration) kept at least 10·dt away from every key so
// that [t, t + dt] stays inside one interpolation interval.
std::vector<double> validation_times(const AnimationClip& clip,
                                     std::size_t samples, double dt);

// Compares Σ_i φ_ui (v_rot + v_tr) built from the scene's (possibly stored)
// φ against the finite-difference LBS vertex velocity.
ValidationReport validate(const SceneFile& scene, const ValidateOptions& options);

struct BenchOptions {
  std::string clip;
  std::size_t repetitions = 20;
  std::size_t instances = 1;
  std::size_t threads = 0;
};

struct BenchReport {
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  std::size_t bones = 0;
  std::size_t moving_bones = 0;
  std::size_t instances = 0;
  std::size_t repetitions = 0;
  double lbs_median_ms = 0.0;  // per frame, all instances
  double vs_median_ms = 0.0;
  double ratio() const { return vs_median_ms / lbs_median_ms; }
};

// Median wall time per frame of LBS-only and LBS + velocity skinning. The
// two paths are timed in alternating repetitions over the same frame times.
BenchReport bench(const SceneFile& scene, const BenchOptions& options);

std::string format_bench_csv(const BenchReport& report);

struct TrajectoryOptions {
  std::optional<std::string> clip;  // rest pose when unset
  double time = 0.0;
  std::vector<std::size_t> vertices;  // every vertex when empty
  std::size_t samples = 16;
  std::optional<double> theta_max;
};

struct TrajectoryResult {
  std::vector<std::size_t> vertices;
  std::vector<std::vector<Vec3>> polylines;
};

// Static pose plus constant bone velocities from `velocities`.
TrajectoryResult trajectory(const SceneFile& scene, const BoneKinematics& velocities,
                            const TrajectoryOptions& options);

// {"bones": [{"bone": i, "angular": [x,y,z], "linear": [x,y,z]}, ...]}
// Unlisted bones are static. Throws ParseError / ReferentialIntegrity.
BoneKinematics parse_velocity_spec(std::string_view text, std::size_t bone_count);

// {"samples": N, "trajectories": [{"vertex": u, "points": [[x,y,z], ...]}]}
std::string format_trajectories(const TrajectoryResult& result);

}  // namespace vskin
