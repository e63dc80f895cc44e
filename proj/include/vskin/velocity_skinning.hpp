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

// Velocity skinning: every vertex of the LBS surface is displaced by
//
//   d_u = Σ_i φ_ui · Σ_deformer F(v_tr_ui, v_rot_ui)
//
// where φ are the upward-propagated weights and, for bone i with origin p_i,
// angular velocity ω_i and linear velocity v_i (relative to the parent,
// global frame),
//
//   v_rot_ui = ω_i × (p_u − p_i),   v_tr_ui = v_i.
//
// Two deformers are provided. Squash: a determinant-one stretch along the
// motion, about the bone centroid (translation) or the medial axis
// (rotation). Floppy: a displacement against the motion (translation) or a
// bend about the joint axis (rotation). Displacements are summed; the frame
// does not depend on any previous frame.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vskin/geometry.hpp"
#include "vskin/kinematics.hpp"
#include "vskin/lbs.hpp"
#include "vskin/rig.hpp"

namespace vskin {

// The squash factor 1 + s is clamped to at least this value so the scaling
// stays invertible for negative gains.
inline constexpr double kMinSquashFactor = 0.1;

struct BoneControls {
  bool squash = true;
  bool floppy = true;
  double rotation_gain = 1.0;
  double translation_gain = 1.0;
  SquashMode squash_mode = SquashMode::kAxis;
  Vec3 centroid_offset;  // bone-local

  friend bool operator==(const BoneControls&, const BoneControls&) = default;
};

// Artist controls. Gains are per vertex and may be negative (anticipation).
struct VsParams {
  std::vector<double> k_squash;
  std::vector<double> k_floppy;
  std::vector<BoneControls> bones;
  std::optional<double> theta_max;  // floppy bend limit, radians

  // Zero gains, every effect enabled, no limiter.
  static VsParams defaults(std::size_t vertex_count, std::size_t bone_count);

  // Throws ReferentialIntegrity on size mismatch, InvalidArgument on
  // non-finite gains or a non-positive theta_max.
  void validate(std::size_t vertex_count, std::size_t bone_count) const;

  friend bool operator==(const VsParams&, const VsParams&) = default;
};

struct VelocityComponent {
  Vec3 rotational;
  Vec3 translational;
};

// v_rot = ω_i × (p − p_i), v_tr = v_i.
VelocityComponent velocity_component(const Vec3& p, std::size_t bone,
                                     const BoneKinematics& kin,
                                     std::span<const PosedBoneGeometry> geometry);

// diag(1+s, 1/√(1+s), 1/√(1+s)), used along the linear velocity.
Mat3 squash_scaling_translational(double s);

// diag(1+s, 1, 1/(1+s)), used in the medial-axis frame.
Mat3 squash_scaling_rotational(double s);

// (R S Rᵀ − I)(p − c) with R the shortest-arc rotation taking x to v_tr and
// s = k‖v_tr‖. Zero when ‖v_tr‖ <= kEpsilon.
Vec3 squash_translational(const Vec3& p, const Vec3& centroid,
                          const Vec3& v_tr, double k_squash);

// (R S Rᵀ − I)(p − Pr(p)) with Pr the projection on the medial axis, R the
// frame whose y follows the axis and whose z is as close as possible to ω,
// and s = k‖v_rot‖. Zero when ω is parallel to the axis.
//
// Without a medial axis (centroid on the origin) the translational form is
// used about the centroid along v_rot. In point mode the translational form
// is used along ω × (c − p_i), falling back to v_rot when that is
// degenerate.
Vec3 squash_rotational(const Vec3& p, const PosedBoneGeometry& geometry,
                       const Vec3& omega, const Vec3& v_rot, double k_squash);

// −k v_tr
Vec3 floppy_translational(const Vec3& v_tr, double k_floppy);

// θ = −k‖v_rot‖, clamped to [−θmax, θmax] when a limit is set.
double floppy_bend_angle(double v_rot_norm, double k_floppy,
                         std::optional<double> theta_max);

// (R − I)(p − Pr(p)) with R the rotation by floppy_bend_angle about the line
// through `origin` along ω. Zero when ‖ω‖ <= kEpsilon.
Vec3 floppy_rotational(const Vec3& p, const Vec3& origin, const Vec3& omega,
                       double v_rot_norm, double k_floppy,
                       std::optional<double> theta_max);

// Per-bone quantities shared by every vertex of a frame.
struct BoneFrame {
  bool active = false;  // moving with at least one effect enabled
  bool squash = false;
  bool floppy = false;
  double rotation_gain = 1.0;
  double translation_gain = 1.0;

  Vec3 origin;
  Vec3 centroid;
  Vec3 omega;
  Vec3 omega_dir;
  double omega_norm = 0.0;
  double inv_omega_norm = 0.0;
  Vec3 linear;
  Vec3 linear_dir;
  double linear_norm = 0.0;

  enum class SquashRotation { kNone, kAxisFrame, kFixedDirection, kVertexDirection };
  SquashRotation squash_rotation = SquashRotation::kNone;
  Vec3 frame_x, frame_y, frame_z;  // medial-axis frame
  double frame_x_offset = 0.0;     // frame_x · (origin − centroid)
  double frame_z_offset = 0.0;
  Vec3 squash_dir;                 // kFixedDirection
  Vec3 origin_to_centroid_neg;     // origin − centroid

  // Multiply the per-vertex gains; zero when the effect is disabled or the
  // bone does not move that way.
  double squash_tr_gain = 0.0;
  double squash_rot_gain = 0.0;
  double floppy_tr_gain = 0.0;
  double floppy_rot_gain = 0.0;
  double floppy_rot_coef = 0.0;  // −floppy_rot_gain
  double theta_limit = 0.0;  // +inf without a limiter
};

std::vector<BoneFrame> prepare_bone_frames(
    const BoneKinematics& kin, std::span<const PosedBoneGeometry> geometry,
    const VsParams& params);

// d_u for one vertex at LBS position p with propagated row φ_u.
Vec3 deform_vertex(std::size_t vertex, const Vec3& p, const WeightRow& phi_row,
                   const VsParams& params, std::span<const BoneFrame> bones);

struct DeformedFrame {
  std::vector<Vec3> lbs_positions;
  std::vector<Vec3> displacements;

  std::vector<Vec3> final_positions() const;
};

// Rest bone geometry from the model's centroids and the artist controls.
std::vector<BoneGeometry> rest_bone_geometry(const RigModel& model,
                                             const VsParams& params);

// Everything of a frame that is derived from the pose alone.
struct PosedFrame {
  std::vector<RigidTransform> globals;
  std::vector<AffineTransform> skinning;
  std::vector<PosedBoneGeometry> geometry;
};

PosedFrame pose_frame(const RigModel& model, std::span<const BoneGeometry> rest,
                      const Pose& pose);

// LBS positions plus velocity-skinning displacements.
void deform_mesh(const RigModel& model, const VsParams& params,
                 const Pose& pose, const BoneKinematics& kin,
                 DeformedFrame& out, std::size_t threads = 1);

// φ stored per bone as runs of consecutive vertices. Depends only on the
// model, so it is built once per model.
struct VsPlan {
  struct Run {
    std::uint32_t begin = 0;  // vertices [begin, end)
    std::uint32_t end = 0;
    std::size_t phi = 0;  // index of φ_{begin,i} in `phi`
  };
  std::vector<std::size_t> offsets;  // bone i owns runs [offsets[i], offsets[i+1])
  std::vector<Run> runs;
  std::vector<double> phi;
};

VsPlan make_vs_plan(const RigModel& model, const VsParams& params);

// Same result as deform_mesh above, bit for bit.
void deform_mesh(const RigModel& model, const VsParams& params,
                 const VsPlan& plan, const Pose& pose,
                 const BoneKinematics& kin, DeformedFrame& out,
                 std::size_t threads = 1);

// Final positions only (lbs + d), without keeping the two parts.
void deform_positions(const RigModel& model, const VsParams& params,
                      const VsPlan& plan, const Pose& pose,
                      const BoneKinematics& kin, std::span<Vec3> out,
                      std::size_t threads = 1);

DeformedFrame deform_mesh(const RigModel& model, const VsParams& params,
                          const Pose& pose, const BoneKinematics& kin,
                          std::size_t threads = 1);

// Polyline per requested vertex: the final position as all bone velocities
// are scaled by λ = k/(samples−1), k = 0..samples−1. Throws InvalidArgument
// for samples < 2 or an out-of-range vertex.
std::vector<std::vector<Vec3>> trace_trajectories(
    const RigModel& model, const VsParams& params, const Pose& pose,
    const BoneKinematics& kin, std::size_t samples,
    std::span<const std::size_t> vertices);

// Σ_i φ_ui (v_rot_ui + v_tr_ui) for every vertex, with the rotational part
// of bone i evaluated at q_ui = Σ_{j ∈ subtree(i)} w_uj T_j p̄_u / Σ w_uj,
// the blend of the positions bone i's subtree assigns to the vertex. With
// that evaluation point the sum equals the time derivative of the LBS
// position. q_ui coincides with the LBS position p_u at the root and in the
// rest pose, but not in general, so ω_i × (p_u − p_i) only approximates the
// subtree's contribution once bones disagree on where the vertex is.
// `phi` is taken as given so a corrupted row shows up as a mismatch.
std::vector<Vec3> decomposed_vertex_velocities(const RigModel& model,
                                               const WeightRows& phi,
                                               const Pose& pose,
                                               const BoneKinematics& kin);

}  // namespace vskin
