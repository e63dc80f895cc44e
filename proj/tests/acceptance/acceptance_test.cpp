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

// One line per acceptance criterion: PASS or FAIL, then the measurement.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "../test_support.hpp"
#include "vskin/assets_io.hpp"
#include "vskin/pipeline.hpp"
#include "vskin/procedural.hpp"
#include "vskin/velocity_skinning.hpp"

namespace vskin {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr int kRandomScenes = 60;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

VsParams random_params(std::size_t nv, std::size_t nb, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gain(-0.1, 0.3);
  VsParams p = VsParams::defaults(nv, nb);
  for (auto& k : p.k_squash) k = gain(rng);
  for (auto& k : p.k_floppy) k = gain(rng);
  return p;
}

Outcome decomposition() {
  const auto start = Clock::now();
  double worst = 0.0;
  int failed = 0;
  for (int seed = 1; seed <= kRandomScenes; ++seed) {
    ValidateOptions opts;
    opts.clip = "clip";
    opts.dt = 1e-4;
    const auto report = validate(testing::random_scene(static_cast<std::uint64_t>(seed)), opts);
    worst = std::max(worst, report.max_rel_error);
    failed += report.passed ? 0 : 1;
  }
  const double elapsed = seconds_since(start);
  return {failed == 0 && worst <= 1e-3 && elapsed <= 30.0,
          fmt("%d scenes, max rel error %.3g (limit 1e-3), %.2f s (limit 30 s)",
              kRandomScenes, worst, elapsed)};
}

double zero_velocity_gap(const SceneFile& scene, const VsParams& params, double t) {
  const RigModel model = make_model(scene);
  const AnimationClip& clip = scene.clips.front();
  const Pose pose = evaluate_pose(clip, model.skeleton.size(), t);
  const DeformedFrame frame = deform_mesh(
      model, params, pose, BoneKinematics::zero(model.skeleton.size()));
  const auto lbs = lbs_positions_at(model.mesh, model.skeleton, model.rest_globals, clip, t);
  const auto out = frame.final_positions();
  double gap = 0.0;
  for (std::size_t u = 0; u < out.size(); ++u) gap = std::max(gap, norm(out[u] - lbs[u]));
  return gap;
}

Outcome zero_velocity() {
  std::mt19937_64 rng(7);
  double gap = 0.0;
  int scenes = 0;
  for (int seed = 1; seed <= kRandomScenes; ++seed, ++scenes) {
    const SceneFile s = testing::random_scene(static_cast<std::uint64_t>(seed));
    VsParams p = random_params(s.mesh.vertex_count(), s.skeleton.size(), rng);
    p.theta_max = seed % 2 ? std::optional<double>(0.5) : std::nullopt;
    gap = std::max(gap, zero_velocity_gap(s, p, 0.37 * s.clips.front().duration));
  }
  CreatureSpec spec;
  spec.target_vertices = 5000;
  const SceneFile creature = make_creature_scene(spec);
  gap = std::max(gap, zero_velocity_gap(creature, creature.vs_params, 0.3));
  ++scenes;
  const SceneFile golden = load_scene(fs::path(VSKIN_TEST_DATA) / "golden" / "scene.json");
  gap = std::max(gap, zero_velocity_gap(golden, golden.vs_params, 0.45));
  ++scenes;
  return {gap <= 1e-12, fmt("%d scenes, max |VS - LBS| %.3g (limit 1e-12)", scenes, gap)};
}

Outcome volume() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> s_dist(0.0, 10.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double s = s_dist(rng);
    worst = std::max(worst, std::abs(squash_scaling_translational(s).determinant() - 1.0));
    worst = std::max(worst, std::abs(squash_scaling_rotational(s).determinant() - 1.0));
  }
  return {worst <= 1e-12, fmt("1e4 values of s per matrix, max |det - 1| %.3g (limit 1e-12)", worst)};
}

double axis_distance(const Vec3& p, const Vec3& origin, const Vec3& dir) {
  return norm(p - project_on_line(p, origin, dir));
}

Outcome isometry() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> k_dist(-0.3, 0.6);
  double worst_op = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Vec3 origin = testing::random_vec(rng, 2.0);
    const Vec3 omega = testing::random_unit(rng) * (0.1 + 20.0 * unit(rng));
    const Vec3 p = origin + testing::random_vec(rng, 3.0);
    const double v_rot = norm(cross(omega, p - origin));
    const std::optional<double> limit =
        k % 3 == 0 ? std::optional<double>(0.2 + unit(rng)) : std::nullopt;
    const Vec3 moved = p + floppy_rotational(p, origin, omega, v_rot, k_dist(rng), limit);
    const Vec3 dir = normalized(omega);
    worst_op = std::max(worst_op, std::abs(axis_distance(moved, origin, dir) -
                                           axis_distance(p, origin, dir)));
  }

  // Same property through the full deformer, one spinning bone at a time.
  double worst_kernel = 0.0;
  std::size_t evaluations = 0;
  for (int config = 0; config < 100; ++config) {
    SceneFile s;
    s.skeleton.bones = {{"root", -1, {}},
                        {"arm", 0, {testing::random_rotation(rng, 1.0), testing::random_vec(rng, 1.0)}}};
    for (int u = 0; u < 100; ++u) {
      s.mesh.rest_positions.push_back(testing::random_vec(rng, 2.0));
      s.mesh.weights.push_back({{1, 1.0}});
    }
    s.vs_params = VsParams::defaults(100, 2);
    for (auto& k : s.vs_params.k_floppy) k = k_dist(rng);
    s.vs_params.bones[1].squash = false;
    if (config % 2) s.vs_params.theta_max = 0.2 + unit(rng);
    const RigModel model = make_model(s);
    Pose pose = Pose::identity(2);
    pose.local[1].rotation = testing::random_rotation(rng, 1.5);
    BoneKinematics kin = BoneKinematics::zero(2);
    kin.angular[1] = testing::random_unit(rng) * (0.1 + 20.0 * unit(rng));
    const DeformedFrame frame = deform_mesh(model, s.vs_params, pose, kin);
    const auto posed = pose_frame(model, rest_bone_geometry(model, s.vs_params), pose);
    const Vec3 origin = posed.geometry[1].origin;
    const Vec3 dir = normalized(kin.angular[1]);
    for (std::size_t u = 0; u < frame.lbs_positions.size(); ++u, ++evaluations) {
      const Vec3& p = frame.lbs_positions[u];
      worst_kernel = std::max(
          worst_kernel, std::abs(axis_distance(p + frame.displacements[u], origin, dir) -
                                 axis_distance(p, origin, dir)));
    }
  }
  const double worst = std::max(worst_op, worst_kernel);
  return {worst <= 1e-9,
          fmt("1e4 operator + %zu deformer evaluations, max axis-distance change %.3g / %.3g (limit 1e-9)",
              evaluations, worst_op, worst_kernel)};
}

// Signed angle of the displacement about the axis, measured from geometry.
double bend_angle(const Vec3& p, const Vec3& moved, const Vec3& origin, const Vec3& dir) {
  const Vec3 a = p - project_on_line(p, origin, dir);
  const Vec3 b = moved - project_on_line(moved, origin, dir);
  return std::atan2(dot(cross(a, b), dir), dot(a, b));
}

Outcome limiter() {
  constexpr double kLimit = std::numbers::pi / 4;
  SceneFile s;
  s.skeleton.bones = {{"root", -1, {}}, {"arm", 0, {{}, {1, 0, 0}}}};
  std::mt19937_64 rng(17);
  for (int u = 0; u < 400; ++u) {
    s.mesh.rest_positions.push_back(Vec3{1, 0, 0} + testing::random_vec(rng, 2.0));
    s.mesh.weights.push_back({{1, 1.0}});
  }
  s.vs_params = VsParams::defaults(400, 2);
  std::fill(s.vs_params.k_floppy.begin(), s.vs_params.k_floppy.end(), 0.1);
  s.vs_params.bones[1].squash = false;
  s.vs_params.theta_max = kLimit;
  // two full turns per second about a tilted axis
  AnimationClip clip;
  clip.name = "whip";
  clip.duration = 1.0;
  const Vec3 axis = normalized(Vec3{0.2, 0.3, 1.0});
  clip.tracks.resize(1);
  clip.tracks[0].bone = 1;
  for (int k = 0; k <= 8; ++k) {
    clip.tracks[0].keys.push_back(
        {k / 8.0, quat_from_axis_angle(axis, 4.0 * std::numbers::pi * k / 8.0), {}});
  }
  s.clips = {clip};

  const RigModel model = make_model(s);
  const auto rest = rest_bone_geometry(model, s.vs_params);
  double applied = 0.0;
  double measured = 0.0;
  double unclamped = 0.0;
  for (int step = 0; step < 50; ++step) {
    const double t = (step + 0.5) / 50.0;
    const Pose pose = evaluate_pose(clip, 2, t);
    const BoneKinematics kin = bone_velocities_analytic(clip, model.skeleton, t);
    const DeformedFrame frame = deform_mesh(model, s.vs_params, pose, kin);
    const Vec3 origin = pose_frame(model, rest, pose).geometry[1].origin;
    const Vec3 dir = normalized(kin.angular[1]);
    for (std::size_t u = 0; u < frame.lbs_positions.size(); ++u) {
      const Vec3& p = frame.lbs_positions[u];
      const double v_rot = norm(cross(kin.angular[1], p - origin));
      unclamped = std::max(unclamped, 0.1 * v_rot);
      applied = std::max(applied, std::abs(floppy_bend_angle(v_rot, 0.1, kLimit)));
      measured = std::max(measured,
                          std::abs(bend_angle(p, p + frame.displacements[u], origin, dir)));
    }
  }
  const bool pass = applied == kLimit && std::abs(measured - kLimit) <= 1e-12 &&
                    unclamped > kLimit;
  return {pass, fmt("unclamped up to %.3f rad, applied max %.17g, measured from geometry %.17g, limit %.17g",
                    unclamped, applied, measured, kLimit)};
}

double phi_of(const WeightRow& row, std::size_t bone) { return testing::weight_of(row, bone); }

Outcome propagation() {
  double worst = 0.0;
  std::size_t vertices = 0;
  for (int seed = 1; seed <= kRandomScenes; ++seed) {
    const RigModel model = make_model(testing::random_scene(static_cast<std::uint64_t>(seed)));
    for (const WeightRow& row : model.phi) {
      worst = std::max(worst, std::abs(phi_of(row, 0) - 1.0));
      ++vertices;
    }
  }
  const RigModel chain = make_model(testing::chain_scene());
  const RigModel branch = make_model(testing::branch_scene());
  const WeightRow& c = chain.phi[0];
  const WeightRow& b = branch.phi[0];
  const bool examples = std::abs(phi_of(c, 0) - 1.0) <= 1e-15 &&
                        std::abs(phi_of(c, 1) - 1.0) <= 1e-15 &&
                        std::abs(phi_of(c, 2) - 0.5) <= 1e-15 &&
                        std::abs(phi_of(b, 0) - 1.0) <= 1e-15 &&
                        std::abs(phi_of(b, 1) - 0.7) <= 1e-15 &&
                        std::abs(phi_of(b, 2) - 0.3) <= 1e-15;
  return {worst <= 1e-9 && examples,
          fmt("%zu vertices, max |phi_root - 1| %.3g (limit 1e-9), chain/branch examples %s",
              vertices, worst, examples ? "match" : "differ")};
}

Outcome performance() {
  const auto start = Clock::now();
  const SceneFile creature = make_creature_scene({});
  BenchOptions opts;
  opts.clip = "swim";
  opts.repetitions = 201;
  const BenchReport report = bench(creature, opts);
  const double elapsed = seconds_since(start);
  return {report.ratio() <= 3.0 && elapsed <= 120.0,
          fmt("%zu vertices, %zu moving bones, LBS %.3f ms, VS %.3f ms, ratio %.2f (limit 3), %.1f s (limit 120 s)",
              report.vertices, report.moving_bones, report.lbs_median_ms,
              report.vs_median_ms, report.ratio(), elapsed)};
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome golden_frames() {
  const fs::path data = fs::path(VSKIN_TEST_DATA) / "golden";
  const fs::path expected = data / "frames";
  std::vector<fs::path> names;
  for (const auto& entry : fs::directory_iterator(expected)) names.push_back(entry.path().filename());
  std::sort(names.begin(), names.end());
  if (names.empty()) return {false, "no committed frames"};

  std::size_t mismatches = 0;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = fs::temp_directory_path() / fmt("vskin_golden_%d", run);
    fs::remove_all(out);
    const std::string cmd = std::string(VSKIN_CLI) + " bake --scene " +
                            (data / "scene.json").string() +
                            " --clip swim --fps 10 --theta-max 0.6 --out " + out.string() +
                            (run ? " --threads 2" : " --threads 1") + " >/dev/null";
    if (run_command(cmd) != 0) return {false, "bake exited with an error"};
    std::size_t produced = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
      (void)entry;
      ++produced;
    }
    if (produced != names.size()) ++mismatches;
    for (const fs::path& name : names) {
      if (!fs::exists(out / name) ||
          read_text_file(out / name) != read_text_file(expected / name)) {
        ++mismatches;
      }
    }
    fs::remove_all(out);
  }
  return {mismatches == 0,
          fmt("%zu committed frames, 2 CLI runs, %zu mismatching files", names.size(), mismatches)};
}

}  // namespace
}  // namespace vskin

int main() {
  using vskin::Outcome;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"decomposition oracle", vskin::decomposition},
      {"zero-velocity identity", vskin::zero_velocity},
      {"volume preservation", vskin::volume},
      {"floppy bend isometry", vskin::isometry},
      {"bend limiter", vskin::limiter},
      {"weight propagation", vskin::propagation},
      {"performance ratio", vskin::performance},
      {"golden-frame determinism", vskin::golden_frames},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
