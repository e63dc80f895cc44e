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

#include "vskin/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vskin/error.hpp"

namespace vskin {

namespace {

struct Interval {
  const Keyframe* k0;
  const Keyframe* k1;  // null when the time is clamped to a single key
  double tau;
};

// Bracketing keys of t. A time exactly on the final key maps to the last
// interval with τ = 1.
Interval bracket(const BoneTrack& track, double t) {
  const auto& keys = track.keys;
  if (keys.empty()) {
    throw Error(ErrorCode::kEmptyTrack,
                "track of bone " + std::to_string(track.bone) + " has no keys");
  }
  if (keys.size() == 1 || t < keys.front().time) {
    return {&keys.front(), nullptr, 0.0};
  }
  if (t > keys.back().time) return {&keys.back(), nullptr, 0.0};
  auto it = std::upper_bound(
      keys.begin(), keys.end(), t,
      [](double value, const Keyframe& k) { return value < k.time; });
  // it points past the last key with time <= t
  std::size_t i = static_cast<std::size_t>(it - keys.begin()) - 1;
  if (i + 1 == keys.size()) i -= 1;  // t == last key: use the final interval
  const Keyframe& a = keys[i];
  const Keyframe& b = keys[i + 1];
  return {&a, &b, (t - a.time) / (b.time - a.time)};
}

std::vector<const BoneTrack*> tracks_by_bone(const AnimationClip& clip,
                                             std::size_t bone_count) {
  std::vector<const BoneTrack*> lookup(bone_count, nullptr);
  for (const BoneTrack& track : clip.tracks) {
    if (track.bone < 0 || static_cast<std::size_t>(track.bone) >= bone_count) {
      throw Error(ErrorCode::kInvalidArgument,
                  "clip '" + clip.name + "' animates missing bone " +
                      std::to_string(track.bone));
    }
    lookup[static_cast<std::size_t>(track.bone)] = &track;
  }
  return lookup;
}

Quat parent_rotation(const std::vector<RigidTransform>& globals,
                     const Skeleton& s, std::size_t i) {
  const int p = s.bones[i].parent;
  return p < 0 ? Quat::identity() : globals[static_cast<std::size_t>(p)].rotation;
}

}  // namespace

void validate_clip(const AnimationClip& clip, std::size_t bone_count) {
  if (!(clip.duration >= 0.0) || !std::isfinite(clip.duration)) {
    throw Error(ErrorCode::kInvalidArgument,
                "clip '" + clip.name + "' has an invalid duration");
  }
  std::vector<bool> seen(bone_count, false);
  for (const BoneTrack& track : clip.tracks) {
    if (track.bone < 0 || static_cast<std::size_t>(track.bone) >= bone_count) {
      throw Error(ErrorCode::kInvalidArgument,
                  "clip '" + clip.name + "' animates missing bone " +
                      std::to_string(track.bone));
    }
    if (seen[static_cast<std::size_t>(track.bone)]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "clip '" + clip.name + "' has two tracks for bone " +
                      std::to_string(track.bone));
    }
    seen[static_cast<std::size_t>(track.bone)] = true;
    if (track.keys.empty()) {
      throw Error(ErrorCode::kEmptyTrack,
                  "clip '" + clip.name + "' track of bone " +
                      std::to_string(track.bone) + " has no keys");
    }
    for (std::size_t k = 1; k < track.keys.size(); ++k) {
      if (!(track.keys[k].time > track.keys[k - 1].time)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "clip '" + clip.name + "' key times of bone " +
                        std::to_string(track.bone) +
                        " are not strictly increasing");
      }
    }
  }
}

double clip_time(const AnimationClip& clip, double t) {
  if (clip.duration <= 0.0) return 0.0;
  if (clip.loop) {
    double wrapped = std::fmod(t, clip.duration);
    if (wrapped < 0.0) wrapped += clip.duration;
    return wrapped;
  }
  return std::clamp(t, 0.0, clip.duration);
}

Pose evaluate_pose(const AnimationClip& clip, std::size_t bone_count,
                   double t) {
  const double ct = clip_time(clip, t);
  const auto lookup = tracks_by_bone(clip, bone_count);
  Pose pose = Pose::identity(bone_count);
  for (std::size_t i = 0; i < bone_count; ++i) {
    if (lookup[i] == nullptr) continue;
    const Interval iv = bracket(*lookup[i], ct);
    if (iv.k1 == nullptr) {
      pose.local[i] = {normalized(iv.k0->rotation), iv.k0->translation};
      continue;
    }
    pose.local[i].rotation = slerp(normalized(iv.k0->rotation),
                                   normalized(iv.k1->rotation), iv.tau);
    pose.local[i].translation =
        iv.k0->translation + iv.tau * (iv.k1->translation - iv.k0->translation);
  }
  return pose;
}

std::vector<RigidTransform> forward_kinematics(const Skeleton& s,
                                               const Pose& pose) {
  std::vector<RigidTransform> globals(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Bone& b = s.bones[i];
    const RigidTransform local = compose(b.rest_local, pose.local[i]);
    globals[i] = b.parent < 0
                     ? local
                     : compose(globals[static_cast<std::size_t>(b.parent)],
                               local);
  }
  return globals;
}

BoneKinematics BoneKinematics::scaled(double s) const {
  BoneKinematics out = *this;
  for (Vec3& w : out.angular) w *= s;
  for (Vec3& v : out.linear) v *= s;
  return out;
}

BoneKinematics bone_velocities_finite_difference(const Skeleton& s,
                                                 const Pose& previous,
                                                 const Pose& current,
                                                 double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDt,
                "finite-difference step must be positive, got " +
                    std::to_string(dt));
  }
  const auto globals = forward_kinematics(s, current);
  BoneKinematics kin = BoneKinematics::zero(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const RigidTransform& rest = s.bones[i].rest_local;
    const RigidTransform prev = compose(rest, previous.local[i]);
    const RigidTransform curr = compose(rest, current.local[i]);
    // quat_log hemispherizes, so the shortest path is taken.
    const Vec3 omega_local =
        quat_log(curr.rotation * conjugate(prev.rotation)) / dt;
    const Vec3 v_local = (curr.translation - prev.translation) / dt;
    const Quat to_global = parent_rotation(globals, s, i);
    kin.angular[i] = rotate(to_global, omega_local);
    kin.linear[i] = rotate(to_global, v_local);
  }
  return kin;
}

BoneKinematics bone_velocities_analytic(const AnimationClip& clip,
                                        const Skeleton& s, double t) {
  const std::size_t nb = s.size();
  const auto lookup = tracks_by_bone(clip, nb);
  const double ct = clip_time(clip, t);
  const auto globals = forward_kinematics(s, evaluate_pose(clip, nb, t));
  BoneKinematics kin = BoneKinematics::zero(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    if (lookup[i] == nullptr) continue;
    const Interval iv = bracket(*lookup[i], ct);
    if (iv.k1 == nullptr) continue;
    const double span = iv.k1->time - iv.k0->time;
    // slerp(q0, q1, τ) = exp(τ log(q1 q0⁻¹)) q0 has constant spatial rate.
    const Vec3 omega_pose = quat_log(normalized(iv.k1->rotation) *
                                     conjugate(normalized(iv.k0->rotation))) /
                            span;
    const Vec3 v_pose = (iv.k1->translation - iv.k0->translation) / span;
    const Quat& rest = s.bones[i].rest_local.rotation;
    const Quat to_global = parent_rotation(globals, s, i) * rest;
    kin.angular[i] = rotate(to_global, omega_pose);
    kin.linear[i] = rotate(to_global, v_pose);
  }
  return kin;
}

BoneKinematics smooth_velocities(std::span<const BoneKinematics> history,
                                 std::size_t window) {
  if (history.empty()) {
    throw Error(ErrorCode::kEmptyHistory, "no velocity history to smooth");
  }
  if (window == 0) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing window must be >= 1");
  }
  const std::size_t n = std::min(window, history.size());
  const auto recent = history.last(n);
  if (n == 1) return recent.front();

  const std::size_t nb = recent.front().size();
  BoneKinematics mean = BoneKinematics::zero(nb);
  for (const BoneKinematics& k : recent) {
    if (k.size() != nb) {
      throw Error(ErrorCode::kInvalidArgument,
                  "velocity history entries have different bone counts");
    }
    for (std::size_t i = 0; i < nb; ++i) {
      mean.angular[i] += k.angular[i];
      mean.linear[i] += k.linear[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  return mean.scaled(inv);
}

}  // namespace vskin
