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

// Fixed-size linear algebra used by the skinning kernels: Vec3, Quat, Mat3,
// RigidTransform, plus the handful of geometric constructions the deformers
// need (shortest-arc rotation, axis frames, projection on a line).

#pragma once

#include <array>
#include <cmath>

namespace vskin {

// Length below which a direction is considered degenerate (model units).
inline constexpr double kEpsilon = 1e-9;

// Angle below which two directions are treated as parallel (radians).
inline constexpr double kParallelAngleTolerance = 1e-6;

// ── Vec3 ────────────────────────────────────────────────────────

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) {
  return {a.x / s, a.y / s, a.z / s};
}

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }

inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// Caller guarantees |a| > 0.
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

// ── Mat3 (row-major) ────────────────────────────────────────────

struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return {}; }
  static constexpr Mat3 zero() { return {{0, 0, 0, 0, 0, 0, 0, 0, 0}}; }
  static constexpr Mat3 diagonal(double a, double b, double c) {
    return {{a, 0, 0, 0, b, 0, 0, 0, c}};
  }
  static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1,
                                     const Vec3& c2) {
    return {{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
  }
  // a bᵀ
  static constexpr Mat3 outer(const Vec3& a, const Vec3& b) {
    return {{a.x * b.x, a.x * b.y, a.x * b.z, a.y * b.x, a.y * b.y, a.y * b.z,
             a.z * b.x, a.z * b.y, a.z * b.z}};
  }

  constexpr double operator()(int row, int col) const {
    return m[static_cast<std::size_t>(row * 3 + col)];
  }
  constexpr double& operator()(int row, int col) {
    return m[static_cast<std::size_t>(row * 3 + col)];
  }

  constexpr Vec3 column(int c) const {
    return {(*this)(0, c), (*this)(1, c), (*this)(2, c)};
  }
  constexpr Vec3 row(int r) const {
    return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)};
  }

  constexpr Mat3 transposed() const {
    return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }

  constexpr double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
          a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
          a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
}

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r = Mat3::zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  }
  return r;
}

constexpr Mat3 operator+(const Mat3& a, const Mat3& b) {
  Mat3 r = a;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] += b.m[i];
  return r;
}

constexpr Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 r = a;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] -= b.m[i];
  return r;
}

constexpr Mat3 operator*(double s, const Mat3& a) {
  Mat3 r = a;
  for (double& v : r.m) v *= s;
  return r;
}

// ── Quat ────────────────────────────────────────────────────────

// Unit quaternion (w, x, y, z). Hamilton product, active rotation
// v' = q v q⁻¹.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr Quat identity() { return {}; }

  constexpr Vec3 vec() const { return {x, y, z}; }

  friend constexpr bool operator==(const Quat&, const Quat&) = default;
};

constexpr Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

constexpr Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

constexpr double dot(const Quat& a, const Quat& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr Quat negated(const Quat& q) { return {-q.w, -q.x, -q.y, -q.z}; }

inline double norm(const Quat& q) { return std::sqrt(dot(q, q)); }

inline Quat normalized(const Quat& q) {
  const double n = norm(q);
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

constexpr Vec3 rotate(const Quat& q, const Vec3& v) {
  // v + w t + u × t, with t = 2 u × v
  const Vec3 u = q.vec();
  const Vec3 t = 2.0 * cross(u, v);
  return v + q.w * t + cross(u, t);
}

constexpr Mat3 to_matrix(const Quat& q) {
  const double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  return {{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),  //
           2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),  //
           2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
}

// Rotation of `angle` radians about `axis` (need not be unit, must be
// nonzero).
Quat quat_from_axis_angle(const Vec3& axis, double angle);

// Rotation vector (axis * angle) -> quaternion.
Quat quat_exp(const Vec3& rotation_vector);

// Inverse of quat_exp on the hemisphere w >= 0: returns axis * angle with
// angle in [0, π]. The input is hemispherized first.
Vec3 quat_log(const Quat& q);

// Shortest-path spherical interpolation; returns a at t=0, b at t=1.
Quat slerp(const Quat& a, const Quat& b, double t);

// Rodrigues: rotation matrix of `angle` about the unit axis.
Mat3 rotation_about_axis(const Vec3& unit_axis, double angle);

// ── RigidTransform ──────────────────────────────────────────────

// x -> rotation * x + translation
struct RigidTransform {
  Quat rotation;
  Vec3 translation;

  static constexpr RigidTransform identity() { return {}; }

  constexpr Vec3 apply(const Vec3& p) const {
    return rotate(rotation, p) + translation;
  }

  friend constexpr bool operator==(const RigidTransform&,
                                   const RigidTransform&) = default;
};

// (a ∘ b)(x) = a(b(x)). Rotation renormalized.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

RigidTransform inverse(const RigidTransform& t);

// ── Geometric constructions ─────────────────────────────────────

// Shortest-arc rotation M with M·â = b̂. Antiparallel inputs rotate by π
// about (â × e_k) normalized, where e_k is the basis axis of the smallest
// |component| of a.
// Throws Error(kDegenerateDirection) when |a| or |b| <= kEpsilon.
Mat3 rotation_from_to(const Vec3& a, const Vec3& b);

// Orthonormal right-handed frame: column y = primary / |primary|, column z =
// Gram–Schmidt projection of `secondary` orthogonal to the primary,
// column x = y × z.
// Throws kDegenerateDirection for a degenerate primary and kParallelAxes when
// the secondary is within kParallelAngleTolerance of the primary line (or is
// itself degenerate).
Mat3 frame_from_primary_secondary(const Vec3& primary, const Vec3& secondary);

// Orthogonal projection of p on the line origin + λ dir.
// Throws kDegenerateDirection when |dir| <= kEpsilon.
Vec3 project_on_line(const Vec3& p, const Vec3& origin, const Vec3& dir);

}  // namespace vskin
