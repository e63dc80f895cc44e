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

#include "vskin/velocity_skinning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

#include "vskin/error.hpp"
#include "vskin/fast_math.hpp"
#include "vskin/parallel.hpp"

namespace vskin {

namespace {

constexpr Vec3 kXAxis{1.0, 0.0, 0.0};

inline double clamp_squash(double s) { return std::max(s, kMinSquashFactor - 1.0); }

// (R S Rᵀ − I) r for S = diag(1+s, a, a), a = 1/√(1+s), along the unit
// direction `dir`. Written as a correction so s = 0 gives exactly zero.
// Fused helpers for the deformer kernel.
[[gnu::always_inline]] inline double fdot(const Vec3& a, const Vec3& b) {
  return std::fma(a.x, b.x, std::fma(a.y, b.y, a.z * b.z));
}

[[gnu::always_inline]] inline Vec3 fcross(const Vec3& a, const Vec3& b) {
  return {std::fma(a.y, b.z, -(a.z * b.y)), std::fma(a.z, b.x, -(a.x * b.z)),
          std::fma(a.x, b.y, -(a.y * b.x))};
}

// y + s v
[[gnu::always_inline]] inline Vec3 axpy(double s, const Vec3& v, const Vec3& y) {
  return {std::fma(s, v.x, y.x), std::fma(s, v.y, y.y), std::fma(s, v.z, y.z)};
}

[[gnu::always_inline]] inline Vec3 squash_along_unit(const Vec3& r, const Vec3& dir,
                                                     double s) {
  const Vec3 axial = fdot(dir, r) * dir;
  const double a = 1.0 / std::sqrt(1.0 + s);
  return axpy(s, axial, (a - 1.0) * (r - axial));
}

// Matrix form used by the public single-term operations.
Vec3 squash_along_matrix(const Vec3& p, const Vec3& center, const Vec3& dir,
                         double s) {
  const Mat3 r = rotation_from_to(kXAxis, dir);
  const Mat3 m = r * squash_scaling_translational(s) * r.transposed() -
                 Mat3::identity();
  return m * (p - center);
}

using Mode = BoneFrame::SquashRotation;

// Contribution of one moving bone to d_u, before the φ weight. Written
// without data-dependent branches so the batched loop vectorizes; disabled
// effects have zero gain and evaluate to exactly zero.
template <Mode M, bool kTranslating, bool kSmallAngle = false>
[[gnu::always_inline]] inline Vec3 bone_term_t(const BoneFrame& b, const Vec3& p,
                                               double ks, double kf) {
  const Vec3 r = p - b.origin;
  const Vec3 v_rot = fcross(b.omega, r);
  const double speed = std::sqrt(fdot(v_rot, v_rot));
  const double rs = speed > kEpsilon ? speed : 0.0;
  Vec3 f;

  if constexpr (kTranslating) {
    const Vec3 q = r + b.origin_to_centroid_neg;
    f = squash_along_unit(q, b.linear_dir,
                          clamp_squash(ks * b.squash_tr_gain * b.linear_norm));
    f = axpy(-(kf * b.floppy_tr_gain), b.linear, f);
  }

  const double s = clamp_squash(ks * b.squash_rot_gain * rs);
  if constexpr (M == Mode::kAxisFrame) {
    // p − Pr(p) differs from p − c only along frame_y, which x and z ignore.
    const Vec3& x = b.frame_x;
    const Vec3& z = b.frame_z;
    const double xq = std::fma(x.x, r.x, std::fma(x.y, r.y, std::fma(x.z, r.z, b.frame_x_offset)));
    const double zq = std::fma(z.x, r.x, std::fma(z.y, r.y, std::fma(z.z, r.z, b.frame_z_offset)));
    f = axpy(s * xq, x, f);
    f = axpy(-(s / (1.0 + s) * zq), z, f);
  } else if constexpr (M == Mode::kFixedDirection) {
    f += squash_along_unit(r + b.origin_to_centroid_neg, b.squash_dir, s);
  } else if constexpr (M == Mode::kVertexDirection) {
    const double inv = rs > 0.0 ? 1.0 / rs : 0.0;
    f += squash_along_unit(r + b.origin_to_centroid_neg, inv * v_rot, s);
  }

  const double theta =
      std::min(b.theta_limit, std::max(-b.theta_limit, kf * b.floppy_rot_coef * rs));
  // kSmallAngle: caller guarantees |θ| < kSinCosReducedLimit; same bits.
  const SinCosM1 sc = kSmallAngle ? sin_cos_m1_reduced(theta) : sin_cos_m1(theta);
  // (cos θ − 1) r⊥ + sin θ (ω̂ × r⊥), with r⊥ = r − (r·ω̂) ω̂ and
  // ω̂ × r⊥ = v_rot / |ω|.
  f = axpy(sc.cos_minus_one, r, f);
  f = axpy(-(sc.cos_minus_one * fdot(r, b.omega_dir)), b.omega_dir, f);
  f = axpy(sc.sin * b.inv_omega_norm, v_rot, f);
  return f;
}

template <bool kTranslating>
Vec3 bone_term_mode(const BoneFrame& b, const Vec3& p, double ks, double kf) {
  switch (b.squash_rotation) {
    case Mode::kAxisFrame:
      return bone_term_t<Mode::kAxisFrame, kTranslating>(b, p, ks, kf);
    case Mode::kFixedDirection:
      return bone_term_t<Mode::kFixedDirection, kTranslating>(b, p, ks, kf);
    case Mode::kVertexDirection:
      return bone_term_t<Mode::kVertexDirection, kTranslating>(b, p, ks, kf);
    case Mode::kNone:
      break;
  }
  return bone_term_t<Mode::kNone, kTranslating>(b, p, ks, kf);
}

Vec3 bone_term(const BoneFrame& b, const Vec3& p, double ks, double kf) {
  return b.linear_norm > kEpsilon ? bone_term_mode<true>(b, p, ks, kf)
                                  : bone_term_mode<false>(b, p, ks, kf);
}

constexpr std::size_t kBlock = 512;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Contiguous slice of one bone's run inside a vertex block.
struct Span {
  const double* px;
  const double* py;
  const double* pz;
  const double* phi;
  const double* ks;
  const double* kf;
  double* dx;
  double* dy;
  double* dz;
  std::size_t n;
};

template <Mode M, bool kTranslating, bool kSmallAngle>
[[gnu::always_inline]] inline void span_loop(
    const BoneFrame& bone, const double* __restrict px, const double* __restrict py,
    const double* __restrict pz, const double* __restrict phi,
    const double* __restrict ks, const double* __restrict kf,
    double* __restrict dx, double* __restrict dy, double* __restrict dz,
    std::size_t n) {
  const BoneFrame b = bone;  // local copy: stores below cannot alias it
  for (std::size_t e = 0; e < n; ++e) {
    const Vec3 f =
        bone_term_t<M, kTranslating, kSmallAngle>(b, {px[e], py[e], pz[e]}, ks[e], kf[e]);
    dx[e] = std::fma(phi[e], f.x, dx[e]);
    dy[e] = std::fma(phi[e], f.y, dy[e]);
    dz[e] = std::fma(phi[e], f.z, dz[e]);
  }
}

template <Mode M, bool kTranslating, bool kSmallAngle>
[[gnu::always_inline]] inline void span_loop(const BoneFrame& b, const Span& sp) {
  span_loop<M, kTranslating, kSmallAngle>(b, sp.px, sp.py, sp.pz, sp.phi, sp.ks, sp.kf, sp.dx,
                             sp.dy, sp.dz, sp.n);
}

template <bool kTranslating, bool kSmallAngle>
[[gnu::always_inline]] inline void span_mode(const BoneFrame& b, const Span& sp) {
  switch (b.squash_rotation) {
    case Mode::kAxisFrame:
      return span_loop<Mode::kAxisFrame, kTranslating, kSmallAngle>(b, sp);
    case Mode::kFixedDirection:
      return span_loop<Mode::kFixedDirection, kTranslating, kSmallAngle>(b, sp);
    case Mode::kVertexDirection:
      return span_loop<Mode::kVertexDirection, kTranslating, kSmallAngle>(b, sp);
    case Mode::kNone:
      break;
  }
  span_loop<Mode::kNone, kTranslating, kSmallAngle>(b, sp);
}

[[gnu::always_inline]] inline void run_span_body(const BoneFrame& b, const Span& sp,
                                                 bool small_angle) {
  const bool translating = b.linear_norm > kEpsilon;
  if (translating && small_angle) {
    span_mode<true, true>(b, sp);
  } else if (translating) {
    span_mode<true, false>(b, sp);
  } else if (small_angle) {
    span_mode<false, true>(b, sp);
  } else {
    span_mode<false, false>(b, sp);
  }
}

// fma is exact-rounded on both paths, so they produce the same bits.
[[gnu::target("avx2,fma")]] void run_span_avx2(const BoneFrame& b, const Span& sp,
                                               bool small_angle) {
  run_span_body(b, sp, small_angle);
}

void run_span_generic(const BoneFrame& b, const Span& sp, bool small_angle) {
  run_span_body(b, sp, small_angle);
}

bool has_avx2_fma() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

void run_span(const BoneFrame& b, const Span& sp, bool small_angle) {
  static const bool fast = has_avx2_fma();
  if (fast) {
    run_span_avx2(b, sp, small_angle);
  } else {
    run_span_generic(b, sp, small_angle);
  }
}

}  // namespace

VsParams VsParams::defaults(std::size_t vertex_count, std::size_t bone_count) {
  VsParams p;
  p.k_squash.assign(vertex_count, 0.0);
  p.k_floppy.assign(vertex_count, 0.0);
  p.bones.assign(bone_count, BoneControls{});
  return p;
}

void VsParams::validate(std::size_t vertex_count, std::size_t bone_count) const {
  if (k_squash.size() != vertex_count || k_floppy.size() != vertex_count) {
    throw Error(ErrorCode::kReferentialIntegrity,
                "vs_params gains have " + std::to_string(k_squash.size()) +
                    "/" + std::to_string(k_floppy.size()) +
                    " entries for " + std::to_string(vertex_count) +
                    " vertices");
  }
  if (bones.size() != bone_count) {
    throw Error(ErrorCode::kReferentialIntegrity,
                "vs_params has " + std::to_string(bones.size()) +
                    " bone entries for " + std::to_string(bone_count) +
                    " bones");
  }
  for (std::size_t u = 0; u < vertex_count; ++u) {
    if (!std::isfinite(k_squash[u]) || !std::isfinite(k_floppy[u])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "gain of vertex " + std::to_string(u) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < bone_count; ++i) {
    const BoneControls& b = bones[i];
    if (!std::isfinite(b.rotation_gain) || !std::isfinite(b.translation_gain) ||
        !is_finite(b.centroid_offset)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "controls of bone " + std::to_string(i) + " are not finite");
    }
  }
  if (theta_max && !(*theta_max > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "theta_max must be positive");
  }
}

VelocityComponent velocity_component(const Vec3& p, std::size_t bone,
                                     const BoneKinematics& kin,
                                     std::span<const PosedBoneGeometry> geometry) {
  return {cross(kin.angular[bone], p - geometry[bone].origin),
          kin.linear[bone]};
}

Mat3 squash_scaling_translational(double s) {
  const double a = 1.0 / std::sqrt(1.0 + s);
  return Mat3::diagonal(1.0 + s, a, a);
}

Mat3 squash_scaling_rotational(double s) {
  return Mat3::diagonal(1.0 + s, 1.0, 1.0 / (1.0 + s));
}

Vec3 squash_translational(const Vec3& p, const Vec3& centroid,
                          const Vec3& v_tr, double k_squash) {
  const double speed = norm(v_tr);
  if (speed <= kEpsilon || k_squash == 0.0) return {};
  return squash_along_matrix(p, centroid, v_tr, clamp_squash(k_squash * speed));
}

Vec3 squash_rotational(const Vec3& p, const PosedBoneGeometry& geometry,
                       const Vec3& omega, const Vec3& v_rot, double k_squash) {
  const double speed = norm(v_rot);
  if (norm(omega) <= kEpsilon || speed <= kEpsilon || k_squash == 0.0) {
    return {};
  }
  const double s = clamp_squash(k_squash * speed);

  if (geometry.squash_mode == SquashMode::kPoint) {
    const Vec3 dir = cross(omega, geometry.centroid - geometry.origin);
    return squash_along_matrix(p, geometry.centroid,
                               norm(dir) > kEpsilon ? dir : v_rot, s);
  }
  if (!geometry.has_medial_axis()) {
    return squash_along_matrix(p, geometry.centroid, v_rot, s);
  }

  const Vec3 axis = geometry.origin - geometry.centroid;
  Mat3 r;
  try {
    r = frame_from_primary_secondary(axis, omega);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParallelAxes) return {};
    throw;
  }
  const Mat3 m =
      r * squash_scaling_rotational(s) * r.transposed() - Mat3::identity();
  return m * (p - project_on_line(p, geometry.centroid, axis));
}

Vec3 floppy_translational(const Vec3& v_tr, double k_floppy) {
  if (norm(v_tr) <= kEpsilon) return {};
  return -k_floppy * v_tr;
}

double floppy_bend_angle(double v_rot_norm, double k_floppy,
                         std::optional<double> theta_max) {
  const double theta = -k_floppy * v_rot_norm;
  if (!theta_max) return theta;
  return std::clamp(theta, -*theta_max, *theta_max);
}

Vec3 floppy_rotational(const Vec3& p, const Vec3& origin, const Vec3& omega,
                       double v_rot_norm, double k_floppy,
                       std::optional<double> theta_max) {
  const double w = norm(omega);
  if (w <= kEpsilon || v_rot_norm <= kEpsilon) return {};
  const double theta = floppy_bend_angle(v_rot_norm, k_floppy, theta_max);
  const Vec3 radial = p - project_on_line(p, origin, omega);
  return rotation_about_axis(omega / w, theta) * radial - radial;
}

std::vector<BoneFrame> prepare_bone_frames(
    const BoneKinematics& kin, std::span<const PosedBoneGeometry> geometry,
    const VsParams& params) {
  std::vector<BoneFrame> frames(geometry.size());
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    BoneFrame& f = frames[i];
    const BoneControls& ctl = params.bones[i];
    const PosedBoneGeometry& g = geometry[i];
    f.squash = ctl.squash;
    f.floppy = ctl.floppy;
    f.rotation_gain = ctl.rotation_gain;
    f.translation_gain = ctl.translation_gain;
    f.origin = g.origin;
    f.centroid = g.centroid;
    f.omega = kin.angular[i];
    f.omega_norm = norm(f.omega);
    f.linear = kin.linear[i];
    f.linear_norm = norm(f.linear);

    const bool rotating = f.omega_norm > kEpsilon;
    const bool translating = f.linear_norm > kEpsilon;
    f.active = (rotating || translating) && (f.squash || f.floppy);
    if (!rotating) {
      f.omega = {};
    } else {
      f.omega_dir = f.omega / f.omega_norm;
      f.inv_omega_norm = 1.0 / f.omega_norm;
    }
    if (!translating) {
      f.linear = {};
    } else {
      f.linear_dir = f.linear / f.linear_norm;
    }
    f.squash_tr_gain = f.squash && translating ? f.translation_gain : 0.0;
    f.floppy_tr_gain = f.floppy && translating ? f.translation_gain : 0.0;
    f.squash_rot_gain = f.squash && rotating ? f.rotation_gain : 0.0;
    f.floppy_rot_gain = f.floppy && rotating ? f.rotation_gain : 0.0;
    f.theta_limit = params.theta_max ? *params.theta_max
                                     : std::numeric_limits<double>::infinity();

    f.floppy_rot_coef = -f.floppy_rot_gain;
    f.origin_to_centroid_neg = g.origin - g.centroid;

    if (!rotating || !f.squash) continue;
    using Mode = BoneFrame::SquashRotation;
    if (g.squash_mode == SquashMode::kPoint) {
      const Vec3 dir = cross(f.omega, g.centroid - g.origin);
      const double n = norm(dir);
      if (n > kEpsilon) {
        f.squash_rotation = Mode::kFixedDirection;
        f.squash_dir = dir / n;
      } else {
        f.squash_rotation = Mode::kVertexDirection;
      }
    } else if (g.has_medial_axis()) {
      try {
        const Mat3 r = frame_from_primary_secondary(g.origin - g.centroid, f.omega);
        f.frame_x = r.column(0);
        f.frame_y = r.column(1);
        f.frame_z = r.column(2);
        f.frame_x_offset = dot(f.frame_x, f.origin_to_centroid_neg);
        f.frame_z_offset = dot(f.frame_z, f.origin_to_centroid_neg);
        f.squash_rotation = Mode::kAxisFrame;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kParallelAxes) throw;
        f.squash_rotation = Mode::kNone;
      }
    } else {
      f.squash_rotation = Mode::kVertexDirection;
    }
  }
  return frames;
}

Vec3 deform_vertex(std::size_t vertex, const Vec3& p, const WeightRow& phi_row,
                   const VsParams& params, std::span<const BoneFrame> bones) {
  const double ks = params.k_squash[vertex];
  const double kf = params.k_floppy[vertex];
  Vec3 d;
  for (const BoneWeight& entry : phi_row) {
    const BoneFrame& b = bones[static_cast<std::size_t>(entry.bone)];
    if (!b.active) continue;
    d = axpy(entry.weight, bone_term(b, p, ks, kf), d);
  }
  return d;
}

std::vector<Vec3> DeformedFrame::final_positions() const {
  std::vector<Vec3> out(lbs_positions.size());
  for (std::size_t u = 0; u < out.size(); ++u) {
    out[u] = lbs_positions[u] + displacements[u];
  }
  return out;
}

std::vector<BoneGeometry> rest_bone_geometry(const RigModel& model,
                                             const VsParams& params) {
  std::vector<BoneGeometry> rest(model.skeleton.size());
  for (std::size_t i = 0; i < rest.size(); ++i) {
    rest[i].centroid = model.centroids[i];
    rest[i].origin = model.rest_globals[i].translation;
    rest[i].centroid_offset = params.bones[i].centroid_offset;
    rest[i].squash_mode = params.bones[i].squash_mode;
  }
  return rest;
}

PosedFrame pose_frame(const RigModel& model, std::span<const BoneGeometry> rest,
                      const Pose& pose) {
  PosedFrame frame;
  frame.globals = forward_kinematics(model.skeleton, pose);
  frame.skinning = to_affine(skinning_matrices(frame.globals, model.rest_globals));
  frame.geometry = posed_bone_geometry(model.rest_globals, frame.globals, rest);
  return frame;
}

namespace {

void check_sizes(const RigModel& model, const VsParams& params,
                 const Pose& pose, const BoneKinematics& kin) {
  const std::size_t nb = model.skeleton.size();
  const std::size_t nv = model.mesh.vertex_count();
  if (params.bones.size() != nb || params.k_squash.size() != nv ||
      params.k_floppy.size() != nv) {
    params.validate(nv, nb);
  }
  if (pose.local.size() != nb || kin.angular.size() != nb ||
      kin.linear.size() != nb) {
    throw Error(ErrorCode::kReferentialIntegrity,
                "pose or kinematics do not match the skeleton");
  }
}

}  // namespace

void deform_mesh(const RigModel& model, const VsParams& params,
                 const Pose& pose, const BoneKinematics& kin,
                 DeformedFrame& out, std::size_t threads) {
  check_sizes(model, params, pose, kin);
  deform_mesh(model, params, make_vs_plan(model, params), pose, kin, out,
              threads);
}

VsPlan make_vs_plan(const RigModel& model, const VsParams& params) {
  const std::size_t nb = model.skeleton.size();
  const std::size_t nv = model.mesh.vertex_count();
  params.validate(nv, nb);
  if (model.phi.size() != nv) {
    throw Error(ErrorCode::kReferentialIntegrity,
                "phi has " + std::to_string(model.phi.size()) + " rows for " +
                    std::to_string(nv) + " vertices");
  }
  std::vector<std::vector<std::pair<std::uint32_t, double>>> per_bone(nb);
  for (std::size_t u = 0; u < nv; ++u) {
    for (const BoneWeight& e : model.phi[u]) {
      if (e.bone < 0 || static_cast<std::size_t>(e.bone) >= nb) {
        throw Error(ErrorCode::kReferentialIntegrity,
                    "phi references bone " + std::to_string(e.bone));
      }
      if (e.weight == 0.0) continue;
      per_bone[static_cast<std::size_t>(e.bone)].emplace_back(
          static_cast<std::uint32_t>(u), e.weight);
    }
  }
  VsPlan plan;
  plan.offsets.push_back(0);
  for (const auto& entries : per_bone) {
    for (const auto& [u, w] : entries) {
      if (plan.runs.size() == plan.offsets.back() || plan.runs.back().end != u) {
        plan.runs.push_back({u, u, plan.phi.size()});
      }
      ++plan.runs.back().end;
      plan.phi.push_back(w);
    }
    plan.offsets.push_back(plan.runs.size());
  }
  return plan;
}

namespace {

// Axis-aligned box of the block and max |k_f|, over independent lanes.
struct BlockBounds {
  Vec3 lo;
  Vec3 hi;
  double kf_max = 0.0;
};

using V2 = double __attribute__((vector_size(16)));

[[gnu::always_inline]] inline V2 load2(const double* p) {
  V2 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
[[gnu::always_inline]] inline V2 vmin(V2 a, V2 b) { return b < a ? b : a; }
[[gnu::always_inline]] inline V2 vmax(V2 a, V2 b) { return a < b ? b : a; }

BlockBounds block_bounds(const double* x, const double* y, const double* z,
                         const double* kf, std::size_t n) {
  constexpr std::size_t kAcc = 4;
  V2 lx[kAcc], ly[kAcc], lz[kAcc], hx[kAcc], hy[kAcc], hz[kAcc], km[kAcc];
  for (std::size_t a = 0; a < kAcc; ++a) {
    lx[a] = ly[a] = lz[a] = V2{kInf, kInf};
    hx[a] = hy[a] = hz[a] = V2{-kInf, -kInf};
    km[a] = V2{0.0, 0.0};
  }
  std::size_t k = 0;
  for (; k + 2 * kAcc <= n; k += 2 * kAcc) {
    for (std::size_t a = 0; a < kAcc; ++a) {
      const std::size_t e = k + 2 * a;
      const V2 vx = load2(x + e), vy = load2(y + e), vz = load2(z + e);
      lx[a] = vmin(lx[a], vx);
      ly[a] = vmin(ly[a], vy);
      lz[a] = vmin(lz[a], vz);
      hx[a] = vmax(hx[a], vx);
      hy[a] = vmax(hy[a], vy);
      hz[a] = vmax(hz[a], vz);
      const V2 f = load2(kf + e);
      km[a] = vmax(km[a], vmax(f, -f));
    }
  }
  BlockBounds b{{kInf, kInf, kInf}, {-kInf, -kInf, -kInf}, 0.0};
  for (std::size_t a = 0; a < kAcc; ++a) {
    for (int l = 0; l < 2; ++l) {
      b.lo = {std::min(b.lo.x, lx[a][l]), std::min(b.lo.y, ly[a][l]), std::min(b.lo.z, lz[a][l])};
      b.hi = {std::max(b.hi.x, hx[a][l]), std::max(b.hi.y, hy[a][l]), std::max(b.hi.z, hz[a][l])};
      b.kf_max = std::max(b.kf_max, km[a][l]);
    }
  }
  for (; k < n; ++k) {
    b.lo = {std::min(b.lo.x, x[k]), std::min(b.lo.y, y[k]), std::min(b.lo.z, z[k])};
    b.hi = {std::max(b.hi.x, x[k]), std::max(b.hi.y, y[k]), std::max(b.hi.z, z[k])};
    b.kf_max = std::max(b.kf_max, std::abs(kf[k]));
  }
  return b;
}

// Writes LBS positions and displacements, or only their sum when
// `final_out` is set.
void deform_blocks(const RigModel& model, const VsParams& params,
                   const VsPlan& plan, const Pose& pose,
                   const BoneKinematics& kin, Vec3* lbs_out, Vec3* disp_out,
                   Vec3* final_out, std::size_t threads) {
  check_sizes(model, params, pose, kin);
  const std::size_t nb = model.skeleton.size();
  if (plan.offsets.size() != nb + 1 || plan.runs.size() != plan.offsets[nb]) {
    throw Error(ErrorCode::kReferentialIntegrity,
                "velocity-skinning plan does not match the model");
  }
  const auto rest = rest_bone_geometry(model, params);
  const PosedFrame frame = pose_frame(model, rest, pose);
  const auto bones = prepare_bone_frames(kin, frame.geometry, params);

  const SkinnedMesh& mesh = model.mesh;
  const std::size_t nv = mesh.vertex_count();
  const std::size_t blocks = (nv + kBlock - 1) / kBlock;
  const std::size_t block_threads = blocks * kBlock < 1024 ? 1 : threads;

  parallel_for(blocks, block_threads, [&](std::size_t first_block, std::size_t last_block) {
    struct Scratch {
      alignas(64) double x[kBlock];
      alignas(64) double y[kBlock];
      alignas(64) double z[kBlock];
      alignas(64) double dx[kBlock];
      alignas(64) double dy[kBlock];
      alignas(64) double dz[kBlock];
    };
    auto scratch = std::make_unique<Scratch>();
    Scratch& sc = *scratch;

    // Per bone, the first run that may still overlap the current block.
    std::vector<std::size_t> cursor(nb);
    const auto block_start = static_cast<std::uint32_t>(first_block * kBlock);
    for (std::size_t i = 0; i < nb; ++i) {
      const auto begin = plan.runs.begin() + static_cast<std::ptrdiff_t>(plan.offsets[i]);
      const auto end = plan.runs.begin() + static_cast<std::ptrdiff_t>(plan.offsets[i + 1]);
      cursor[i] = static_cast<std::size_t>(
          std::partition_point(begin, end,
                               [&](const VsPlan::Run& r) { return r.end <= block_start; }) -
          plan.runs.begin());
    }

    for (std::size_t blk = first_block; blk < last_block; ++blk) {
      const std::size_t v0 = blk * kBlock;
      const std::size_t v1 = std::min(nv, v0 + kBlock);
      const std::size_t n = v1 - v0;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t u = v0 + k;
        const Vec3& rest_p = mesh.rest_positions[u];
        Vec3 p;
        for (const BoneWeight& bw : mesh.weights[u]) {
          p += bw.weight *
               frame.skinning[static_cast<std::size_t>(bw.bone)].apply(rest_p);
        }
        if (lbs_out) lbs_out[u] = p;
        sc.x[k] = p.x;
        sc.y[k] = p.y;
        sc.z[k] = p.z;
      }
      std::fill_n(sc.dx, n, 0.0);
      std::fill_n(sc.dy, n, 0.0);
      std::fill_n(sc.dz, n, 0.0);
      const BlockBounds bb = block_bounds(sc.x, sc.y, sc.z, params.k_floppy.data() + v0, n);
      const Vec3 lo = bb.lo;
      const Vec3 hi = bb.hi;
      const double kf_max = bb.kf_max;
      const Vec3 center = 0.5 * (lo + hi);
      const double radius = 0.5 * norm(hi - lo);

      for (std::size_t i = 0; i < nb; ++i) {
        const BoneFrame& b = bones[i];
        std::size_t& c = cursor[i];
        const std::size_t last = plan.offsets[i + 1];
        while (c < last && plan.runs[c].end <= v0) ++c;
        if (!b.active) continue;
        // |θ| ≤ |k_f| |gain| |ω| |p − origin| over the block.
        const double reach = norm(center - b.origin) + radius;
        const double theta_bound =
            std::min(b.theta_limit,
                     kf_max * std::abs(b.floppy_rot_gain) * b.omega_norm * reach);
        const bool small_angle = theta_bound * (1.0 + 1e-9) < kSinCosReducedLimit;
        for (std::size_t r = c; r < last && plan.runs[r].begin < v1; ++r) {
          const VsPlan::Run& run = plan.runs[r];
          const std::size_t a = std::max<std::size_t>(run.begin, v0);
          const std::size_t z = std::min<std::size_t>(run.end, v1);
          const std::size_t o = a - v0;
          run_span(b, {sc.x + o, sc.y + o, sc.z + o,
                       plan.phi.data() + run.phi + (a - run.begin),
                       params.k_squash.data() + a, params.k_floppy.data() + a,
                       sc.dx + o, sc.dy + o, sc.dz + o, z - a},
                   small_angle);
        }
      }

      if (final_out) {
        for (std::size_t k = 0; k < n; ++k) {
          final_out[v0 + k] = {sc.x[k] + sc.dx[k], sc.y[k] + sc.dy[k],
                               sc.z[k] + sc.dz[k]};
        }
      } else {
        for (std::size_t k = 0; k < n; ++k) {
          disp_out[v0 + k] = {sc.dx[k], sc.dy[k], sc.dz[k]};
        }
      }
    }
  });
}

}  // namespace

void deform_mesh(const RigModel& model, const VsParams& params,
                 const VsPlan& plan, const Pose& pose,
                 const BoneKinematics& kin, DeformedFrame& out,
                 std::size_t threads) {
  const std::size_t nv = model.mesh.vertex_count();
  out.lbs_positions.resize(nv);
  out.displacements.resize(nv);
  deform_blocks(model, params, plan, pose, kin, out.lbs_positions.data(),
                out.displacements.data(), nullptr, threads);
}

void deform_positions(const RigModel& model, const VsParams& params,
                      const VsPlan& plan, const Pose& pose,
                      const BoneKinematics& kin, std::span<Vec3> out,
                      std::size_t threads) {
  if (out.size() != model.mesh.vertex_count()) {
    throw Error(ErrorCode::kInvalidArgument,
                "output holds " + std::to_string(out.size()) + " positions for " +
                    std::to_string(model.mesh.vertex_count()) + " vertices");
  }
  deform_blocks(model, params, plan, pose, kin, nullptr, nullptr, out.data(),
                threads);
}

DeformedFrame deform_mesh(const RigModel& model, const VsParams& params,
                          const Pose& pose, const BoneKinematics& kin,
                          std::size_t threads) {
  DeformedFrame out;
  deform_mesh(model, params, pose, kin, out, threads);
  return out;
}

std::vector<std::vector<Vec3>> trace_trajectories(
    const RigModel& model, const VsParams& params, const Pose& pose,
    const BoneKinematics& kin, std::size_t samples,
    std::span<const std::size_t> vertices) {
  if (samples < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "trajectories need at least 2 samples");
  }
  const std::size_t nv = model.mesh.vertex_count();
  for (std::size_t u : vertices) {
    if (u >= nv) {
      throw Error(ErrorCode::kInvalidArgument,
                  "vertex " + std::to_string(u) + " is out of range");
    }
  }
  check_sizes(model, params, pose, kin);
  const auto rest = rest_bone_geometry(model, params);
  const PosedFrame frame = pose_frame(model, rest, pose);

  std::vector<Vec3> lbs(vertices.size());
  for (std::size_t n = 0; n < vertices.size(); ++n) {
    const std::size_t u = vertices[n];
    for (const BoneWeight& bw : model.mesh.weights[u]) {
      lbs[n] += bw.weight * frame.skinning[static_cast<std::size_t>(bw.bone)]
                                .apply(model.mesh.rest_positions[u]);
    }
  }

  std::vector<std::vector<Vec3>> lines(vertices.size(),
                                       std::vector<Vec3>(samples));
  for (std::size_t k = 0; k < samples; ++k) {
    const double lambda =
        static_cast<double>(k) / static_cast<double>(samples - 1);
    const auto bones =
        prepare_bone_frames(kin.scaled(lambda), frame.geometry, params);
    for (std::size_t n = 0; n < vertices.size(); ++n) {
      const std::size_t u = vertices[n];
      lines[n][k] = lbs[n] + deform_vertex(u, lbs[n], model.phi[u], params, bones);
    }
  }
  return lines;
}

std::vector<Vec3> decomposed_vertex_velocities(const RigModel& model,
                                               const WeightRows& phi,
                                               const Pose& pose,
                                               const BoneKinematics& kin) {
  const Skeleton& s = model.skeleton;
  const std::size_t nb = s.size();
  const auto globals = forward_kinematics(s, pose);
  const auto skin = to_affine(skinning_matrices(globals, model.rest_globals));

  std::vector<Vec3> velocities(model.mesh.vertex_count());
  std::vector<Vec3> subtree_position(nb);
  std::vector<double> subtree_weight(nb);
  for (std::size_t u = 0; u < velocities.size(); ++u) {
    std::fill(subtree_position.begin(), subtree_position.end(), Vec3{});
    std::fill(subtree_weight.begin(), subtree_weight.end(), 0.0);
    const Vec3& rest_p = model.mesh.rest_positions[u];
    for (const BoneWeight& bw : model.mesh.weights[u]) {
      const auto i = static_cast<std::size_t>(bw.bone);
      subtree_position[i] += bw.weight * skin[i].apply(rest_p);
      subtree_weight[i] += bw.weight;
    }
    for (std::size_t i = nb; i-- > 1;) {
      const auto parent = static_cast<std::size_t>(s.bones[i].parent);
      subtree_position[parent] += subtree_position[i];
      subtree_weight[parent] += subtree_weight[i];
    }

    Vec3 v;
    for (const BoneWeight& entry : phi[u]) {
      const auto j = static_cast<std::size_t>(entry.bone);
      if (subtree_weight[j] <= 0.0) continue;
      const Vec3 eval_point = subtree_position[j] / subtree_weight[j];
      const Vec3 v_rot = cross(kin.angular[j], eval_point - globals[j].translation);
      v += entry.weight * (v_rot + kin.linear[j]);
    }
    velocities[u] = v;
  }
  return velocities;
}

}  // namespace vskin
