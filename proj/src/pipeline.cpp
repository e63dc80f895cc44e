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

#include "vskin/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "vskin/error.hpp"

namespace vskin {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

VsParams effective_params(const SceneFile& scene, std::optional<double> theta_max) {
  VsParams params = scene.vs_params;
  if (theta_max) params.theta_max = theta_max;
  params.validate(scene.mesh.vertex_count(), scene.skeleton.size());
  return params;
}

BoneKinematics frame_velocities(const AnimationClip& clip, const Skeleton& skeleton,
                                double t, double dt) {
  const std::size_t nb = skeleton.size();
  if (clip.loop || t - dt >= 0.0) {
    return bone_velocities_finite_difference(
        skeleton, evaluate_pose(clip, nb, t - dt), evaluate_pose(clip, nb, t), dt);
  }
  return bone_velocities_finite_difference(
      skeleton, evaluate_pose(clip, nb, t), evaluate_pose(clip, nb, t + dt), dt);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool track_moves(const BoneTrack& track) {
  for (std::size_t k = 1; k < track.keys.size(); ++k) {
    const Keyframe& a = track.keys[0];
    const Keyframe& b = track.keys[k];
    if (std::abs(dot(a.rotation, b.rotation)) < 1.0 - 1e-15 ||
        a.translation.x != b.translation.x || a.translation.y != b.translation.y ||
        a.translation.z != b.translation.z) {
      return true;
    }
  }
  return false;
}

}  // namespace

BakeOutput bake(const SceneFile& scene, const BakeOptions& options) {
  if (!(options.fps > 0.0) || !std::isfinite(options.fps)) {
    throw Error(ErrorCode::kInvalidArgument, "fps must be positive");
  }
  if (!(options.dt > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDt, "dt must be positive");
  }
  if (options.smooth_window == 0) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing window must be at least 1");
  }
  const AnimationClip& clip = scene.clip(options.clip);
  const RigModel model = make_model(scene);
  const VsParams params = effective_params(scene, options.theta_max);
  const VsPlan plan = make_vs_plan(model, params);
  const std::size_t nb = model.skeleton.size();

  BakeOutput out;
  out.fps = options.fps;
  const std::size_t frames = bake_frame_count(clip.duration, options.fps);
  out.frames.reserve(frames);

  std::vector<BoneKinematics> history;
  DeformedFrame deformed;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / options.fps;
    const Pose pose = evaluate_pose(clip, nb, t);
    if (options.mode == BakeMode::kLbs) {
      out.frames.push_back(lbs_deform(
          model.mesh, skinning_matrices(forward_kinematics(model.skeleton, pose),
                                        model.rest_globals),
          options.threads));
      continue;
    }
    history.push_back(frame_velocities(clip, model.skeleton, t, options.dt));
    if (history.size() > options.smooth_window) history.erase(history.begin());
    const BoneKinematics kin = smooth_velocities(history, options.smooth_window);
    deform_mesh(model, params, plan, pose, kin, deformed, options.threads);
    out.frames.push_back(deformed.final_positions());
    std::vector<double> magnitudes(deformed.displacements.size());
    for (std::size_t u = 0; u < magnitudes.size(); ++u) {
      magnitudes[u] = norm(deformed.displacements[u]);
    }
    out.displacement_magnitudes.push_back(std::move(magnitudes));
  }
  return out;
}

std::vector<double> relative_errors(std::span<const Vec3> actual,
                                    std::span<const Vec3> reference) {
  if (actual.size() != reference.size()) {
    throw Error(ErrorCode::kInvalidArgument, "velocity fields differ in size");
  }
  double scale = 0.0;
  for (const Vec3& v : reference) scale = std::max(scale, norm(v));
  const double floor = std::max(0.01 * scale, 1e-12);
  std::vector<double> errors(actual.size());
  for (std::size_t u = 0; u < actual.size(); ++u) {
    const Vec3 delta = actual[u] - reference[u];
    if (delta.x == 0.0 && delta.y == 0.0 && delta.z == 0.0) continue;
    errors[u] = norm(delta) / std::max(norm(reference[u]), floor);
  }
  return errors;
}

std::vector<double> validation_times(const AnimationClip& clip, std::size_t samples,
                                     double dt) {
  if (samples == 0) {
    throw Error(ErrorCode::kInvalidArgument, "at least one sample is required");
  }
  std::vector<double> keys{0.0, clip.duration};
  for (const BoneTrack& track : clip.tracks) {
    for (const Keyframe& key : track.keys) keys.push_back(key.time);
  }
  const double margin = 10.0 * dt;
  const auto near_key = [&](double t) {
    return std::any_of(keys.begin(), keys.end(), [&](double key) {
      return std::abs(t - key) < margin;
    });
  };
  std::vector<double> times;
  times.reserve(samples);
  const auto n = static_cast<double>(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    double t = (static_cast<double>(k) + 0.5) / n * clip.duration;
    // Nudge within the sample's own slot until clear of every key.
    for (int step = 0; step < 64 && near_key(t); ++step) {
      t += 2.0 * margin;
    }
    times.push_back(t);
  }
  return times;
}

ValidationReport validate(const SceneFile& scene, const ValidateOptions& options) {
  if (!(options.dt > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDt, "dt must be positive");
  }
  const AnimationClip& clip = scene.clip(options.clip);
  const RigModel model = make_model(scene);
  const std::size_t nb = model.skeleton.size();

  ValidationReport report;
  report.threshold = options.threshold;
  double error_sum = 0.0;
  std::size_t error_count = 0;
  for (double t : validation_times(clip, options.samples, options.dt)) {
    // forward quotient over [t, t + dt] is second-order accurate at the midpoint
    const double mid = t + 0.5 * options.dt;
    const Pose pose = evaluate_pose(clip, nb, mid);
    const BoneKinematics kin = bone_velocities_analytic(clip, model.skeleton, mid);
    const auto decomposed = decomposed_vertex_velocities(model, model.phi, pose, kin);
    const auto oracle =
        vertex_velocity_oracle(model.mesh, model.skeleton, clip, t, options.dt);
    const auto errors = relative_errors(decomposed, oracle);

    ValidationSample sample;
    sample.time = t;
    double sum = 0.0;
    for (double e : errors) {
      sample.max_rel_error = std::max(sample.max_rel_error, e);
      sum += e;
    }
    sample.mean_rel_error = errors.empty() ? 0.0 : sum / static_cast<double>(errors.size());
    error_sum += sum;
    error_count += errors.size();
    report.max_rel_error = std::max(report.max_rel_error, sample.max_rel_error);
    report.samples.push_back(sample);
  }
  report.mean_rel_error =
      error_count == 0 ? 0.0 : error_sum / static_cast<double>(error_count);
  report.passed = report.max_rel_error <= options.threshold;
  return report;
}

BenchReport bench(const SceneFile& scene, const BenchOptions& options) {
  if (options.repetitions == 0 || options.instances == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "repetitions and instances must be at least 1");
  }
  const AnimationClip& clip = scene.clip(options.clip);
  const RigModel model = make_model(scene);
  const VsParams params = effective_params(scene, std::nullopt);
  const VsPlan plan = make_vs_plan(model, params);
  const std::size_t nb = model.skeleton.size();
  const std::size_t nv = model.mesh.vertex_count();

  BenchReport report;
  report.vertices = nv;
  report.triangles = model.mesh.triangles.size();
  report.bones = nb;
  for (const BoneTrack& track : clip.tracks) {
    if (track_moves(track)) ++report.moving_bones;
  }
  report.instances = options.instances;
  report.repetitions = options.repetitions;

  std::vector<Vec3> lbs_out(nv);
  std::vector<Vec3> vs_out(nv);

  std::vector<double> lbs_ms;
  std::vector<double> vs_ms;
  const double duration = clip.duration > 0.0 ? clip.duration : 1.0;
  for (std::size_t r = 0; r < options.repetitions; ++r) {
    const double t0 = duration * (static_cast<double>(r) + 0.5) /
                      static_cast<double>(options.repetitions);
    const auto time_of = [&](std::size_t instance) {
      return t0 + 0.37 * static_cast<double>(instance);
    };

    auto start = Clock::now();
    for (std::size_t i = 0; i < options.instances; ++i) {
      const Pose pose = evaluate_pose(clip, nb, time_of(i));
      const auto skin = to_affine(skinning_matrices(
          forward_kinematics(model.skeleton, pose), model.rest_globals));
      lbs_deform_into(model.mesh, skin, lbs_out, options.threads);
    }
    lbs_ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - start).count());

    start = Clock::now();
    for (std::size_t i = 0; i < options.instances; ++i) {
      const double t = time_of(i);
      const Pose pose = evaluate_pose(clip, nb, t);
      const BoneKinematics kin = bone_velocities_analytic(clip, model.skeleton, t);
      deform_positions(model, params, plan, pose, kin, vs_out, options.threads);
    }
    vs_ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - start).count());
  }
  report.lbs_median_ms = median(lbs_ms);
  report.vs_median_ms = median(vs_ms);
  return report;
}

std::string format_bench_csv(const BenchReport& report) {
  char line[256];
  std::snprintf(line, sizeof(line), "%zu,%zu,%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f\n",
                report.vertices, report.triangles, report.bones,
                report.moving_bones, report.instances, report.repetitions,
                report.lbs_median_ms, report.vs_median_ms, report.ratio());
  return "vertices,triangles,bones,moving_bones,instances,repetitions,"
         "lbs_median_ms,vs_median_ms,vs_lbs_ratio\n" +
         std::string(line);
}

TrajectoryResult trajectory(const SceneFile& scene, const BoneKinematics& velocities,
                            const TrajectoryOptions& options) {
  const RigModel model = make_model(scene);
  const VsParams params = effective_params(scene, options.theta_max);
  const std::size_t nb = model.skeleton.size();
  const Pose pose = options.clip
                        ? evaluate_pose(scene.clip(*options.clip), nb, options.time)
                        : Pose::identity(nb);

  TrajectoryResult result;
  result.vertices = options.vertices;
  if (result.vertices.empty()) {
    result.vertices.resize(model.mesh.vertex_count());
    for (std::size_t u = 0; u < result.vertices.size(); ++u) result.vertices[u] = u;
  }
  result.polylines = trace_trajectories(model, params, pose, velocities,
                                        options.samples, result.vertices);
  return result;
}

BoneKinematics parse_velocity_spec(std::string_view text, std::size_t bone_count) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("velocity spec: ") + e.what());
  }
  const auto vec3 = [](const Json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
        !v[2].is_number()) {
      throw Error(ErrorCode::kParseError, "expected [x, y, z] at " + path);
    }
    return Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  };
  if (!j.is_object() || !j.contains("bones") || !j["bones"].is_array()) {
    throw Error(ErrorCode::kParseError, "missing field 'bones' at /");
  }
  BoneKinematics kin = BoneKinematics::zero(bone_count);
  std::size_t index = 0;
  for (const Json& entry : j["bones"]) {
    const std::string path = "/bones/" + std::to_string(index++);
    if (!entry.is_object() || !entry.contains("bone") ||
        !entry["bone"].is_number_integer()) {
      throw Error(ErrorCode::kParseError, "missing field 'bone' at " + path);
    }
    const auto bone = entry["bone"].get<long long>();
    if (bone < 0 || static_cast<std::size_t>(bone) >= bone_count) {
      throw Error(ErrorCode::kReferentialIntegrity,
                  "bone " + std::to_string(bone) + " at " + path +
                      " does not exist (skeleton has " +
                      std::to_string(bone_count) + " bones)");
    }
    const auto b = static_cast<std::size_t>(bone);
    if (entry.contains("angular")) kin.angular[b] = vec3(entry["angular"], path + "/angular");
    if (entry.contains("linear")) kin.linear[b] = vec3(entry["linear"], path + "/linear");
  }
  return kin;
}

std::string format_trajectories(const TrajectoryResult& result) {
  Json out;
  out["samples"] = result.polylines.empty() ? 0 : result.polylines.front().size();
  Json lines = Json::array();
  for (std::size_t n = 0; n < result.polylines.size(); ++n) {
    Json points = Json::array();
    for (const Vec3& p : result.polylines[n]) points.push_back({p.x, p.y, p.z});
    lines.push_back({{"vertex", result.vertices[n]}, {"points", std::move(points)}});
  }
  out["trajectories"] = std::move(lines);
  return out.dump(1) + "\n";
}

}  // namespace vskin
