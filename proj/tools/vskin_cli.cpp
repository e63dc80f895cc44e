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

// vskin: precompute, bake, validate, bench, trajectory and generate.
// Exit codes: 0 success, 1 validation failure, 2 input or usage error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vskin/assets_io.hpp"
#include "vskin/error.hpp"
#include "vskin/pipeline.hpp"
#include "vskin/procedural.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;

vskin::SceneFile load_with_warnings(const std::string& path) {
  std::vector<std::string> warnings;
  vskin::SceneFile scene = vskin::load_scene(path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return scene;
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    vskin::write_text_file(out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Velocity skinning engine"};
  app.require_subcommand(1);

  std::string scene_path;
  std::string out;
  std::string clip;
  std::size_t threads = 0;

  // precompute
  auto* precompute = app.add_subcommand("precompute", "Write phi, psi, masses and centroids into the scene");
  precompute->add_option("--scene", scene_path, "Input scene")->required();
  precompute->add_option("--out", out, "Output scene (default: overwrite input)");

  // bake
  vskin::BakeOptions bake_opts;
  std::string mode = "vs";
  std::optional<double> bake_theta;
  auto* bake = app.add_subcommand("bake", "Export an OBJ per frame");
  bake->add_option("--scene", scene_path, "Input scene")->required();
  bake->add_option("--clip", bake_opts.clip, "Clip name")->required();
  bake->add_option("--fps", bake_opts.fps, "Frames per second")->capture_default_str();
  bake->add_option("--dt", bake_opts.dt, "Velocity finite-difference step")->capture_default_str();
  bake->add_option("--mode", mode, "lbs or vs")
      ->check(CLI::IsMember({"lbs", "vs"}))
      ->capture_default_str();
  bake->add_option("--smooth-window", bake_opts.smooth_window, "Frames averaged for bone velocities")
      ->capture_default_str();
  bake->add_option("--theta-max", bake_theta, "Floppy bend limit override (radians)");
  bake->add_option("--out", out, "Output directory")->required();
  bake->add_option("--threads", threads, "Worker threads (0: all cores)");

  // validate
  vskin::ValidateOptions val_opts;
  auto* validate = app.add_subcommand("validate", "Check the velocity decomposition against finite differences");
  validate->add_option("--scene", scene_path, "Input scene")->required();
  validate->add_option("--clip", val_opts.clip, "Clip name")->required();
  validate->add_option("--dt", val_opts.dt, "Finite-difference step")->capture_default_str();
  validate->add_option("--samples", val_opts.samples, "Sample times")->capture_default_str();
  validate->add_option("--threshold", val_opts.threshold, "Maximum relative error")->capture_default_str();

  // bench
  vskin::BenchOptions bench_opts;
  std::size_t bench_vertices = 150'000;
  auto* bench = app.add_subcommand("bench", "Time LBS against LBS plus velocity skinning");
  bench->add_option("--scene", scene_path, "Input scene (default: generated creature)");
  bench->add_option("--clip", bench_opts.clip, "Clip name (default: first clip)");
  bench->add_option("--instances", bench_opts.instances, "Instances per frame")->capture_default_str();
  bench->add_option("--reps", bench_opts.repetitions, "Timed repetitions")->capture_default_str();
  bench->add_option("--mesh-vertices", bench_vertices, "Generated creature size")->capture_default_str();
  bench->add_option("--out", out, "CSV output (default: stdout)");
  bench->add_option("--threads", threads, "Worker threads (0: all cores)");

  // trajectory
  vskin::TrajectoryOptions traj_opts;
  std::string velocity_path;
  std::string traj_clip;
  auto* traj = app.add_subcommand("trajectory", "Sample deformed positions under growing bone velocity");
  traj->add_option("--scene", scene_path, "Input scene")->required();
  traj->add_option("--velocities", velocity_path, "Bone velocity spec (JSON)")->required();
  traj->add_option("--vertices", traj_opts.vertices, "Vertex indices (default: all)")->delimiter(',');
  traj->add_option("--samples", traj_opts.samples, "Points per polyline")->capture_default_str();
  traj->add_option("--clip", traj_clip, "Pose from this clip (default: rest pose)");
  traj->add_option("--time", traj_opts.time, "Pose time in the clip");
  traj->add_option("--theta-max", traj_opts.theta_max, "Floppy bend limit override (radians)");
  traj->add_option("--out", out, "JSON output (default: stdout)");

  // generate
  vskin::CreatureSpec creature;
  auto* generate = app.add_subcommand("generate", "Write a procedural tentacle creature scene");
  generate->add_option("--mesh-vertices", creature.target_vertices, "Approximate vertex count")
      ->capture_default_str();
  generate->add_option("--tentacles", creature.tentacles)->capture_default_str();
  generate->add_option("--bones-per-tentacle", creature.bones_per_tentacle)->capture_default_str();
  generate->add_option("--out", out, "Output scene")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (precompute->parsed()) {
      const auto scene = vskin::precompute_model(load_with_warnings(scene_path));
      vskin::save_scene(scene, out.empty() ? scene_path : out);
      return kExitOk;
    }
    if (bake->parsed()) {
      bake_opts.mode = mode == "lbs" ? vskin::BakeMode::kLbs : vskin::BakeMode::kVs;
      bake_opts.theta_max = bake_theta;
      bake_opts.threads = threads;
      const auto scene = load_with_warnings(scene_path);
      const auto result = vskin::bake(scene, bake_opts);
      const auto files = vskin::export_obj_sequence(result, scene.mesh.triangles, out);
      std::cout << "wrote " << files.size() << " frames to " << out << "\n";
      return kExitOk;
    }
    if (validate->parsed()) {
      const auto report = vskin::validate(load_with_warnings(scene_path), val_opts);
      for (const auto& s : report.samples) {
        std::printf("t=%.6f max_rel_error=%.3e mean_rel_error=%.3e\n", s.time,
                    s.max_rel_error, s.mean_rel_error);
      }
      std::printf("%s max_rel_error=%.3e threshold=%.3e\n",
                  report.passed ? "PASS" : "FAIL", report.max_rel_error,
                  report.threshold);
      return report.passed ? kExitOk : kExitValidation;
    }
    if (bench->parsed()) {
      vskin::SceneFile scene;
      if (scene_path.empty()) {
        vskin::CreatureSpec spec;
        spec.target_vertices = bench_vertices;
        scene = vskin::make_creature_scene(spec);
      } else {
        scene = load_with_warnings(scene_path);
      }
      if (bench_opts.clip.empty()) {
        if (scene.clips.empty()) {
          throw vskin::Error(vskin::ErrorCode::kInvalidArgument, "scene has no clips");
        }
        bench_opts.clip = scene.clips.front().name;
      }
      bench_opts.threads = threads;
      write_or_print(out, vskin::format_bench_csv(vskin::bench(scene, bench_opts)));
      return kExitOk;
    }
    if (traj->parsed()) {
      const auto scene = load_with_warnings(scene_path);
      const auto velocities = vskin::parse_velocity_spec(
          vskin::read_text_file(velocity_path), scene.skeleton.size());
      if (!traj_clip.empty()) traj_opts.clip = traj_clip;
      write_or_print(out, vskin::format_trajectories(
                              vskin::trajectory(scene, velocities, traj_opts)));
      return kExitOk;
    }
    if (generate->parsed()) {
      vskin::save_scene(vskin::make_creature_scene(creature), out);
      return kExitOk;
    }
  } catch (const vskin::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
