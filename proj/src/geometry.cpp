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

#include "vskin/geometry.hpp"

#include <cmath>

#include "vskin/error.hpp"

namespace vskin {

namespace {

// Below this rotation angle the series expansions of exp/log are used.
constexpr double kSmallAngle = 1e-8;

}  // namespace

Quat quat_from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 n = normalized(axis);
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return {std::cos(h), n.x * s, n.y * s, n.z * s};
}

Quat quat_exp(const Vec3& r) {
  const double angle = norm(r);
  if (angle < kSmallAngle) {
    return normalized(Quat{1.0 - angle * angle / 8.0, 0.5 * r.x, 0.5 * r.y,
                           0.5 * r.z});
  }
  const double h = 0.5 * angle;
  const double s = std::sin(h) / angle;
  return {std::cos(h), r.x * s, r.y * s, r.z * s};
}

Vec3 quat_log(const Quat& q_in) {
  const Quat q = q_in.w < 0.0 ? negated(q_in) : q_in;
  const Vec3 v = q.vec();
  const double s = norm(v);
  if (s < kSmallAngle) {
    // angle ≈ 2 s / w
    return v * (2.0 / q.w);
  }
  const double angle = 2.0 * std::atan2(s, q.w);
  return v * (angle / s);
}

Quat slerp(const Quat& a, const Quat& b, double t) {
  // (b a⁻¹)^t a; quat_log takes the short way around.
  const Vec3 delta = quat_log(b * conjugate(a));
  return normalized(quat_exp(delta * t) * a);
}

Mat3 rotation_about_axis(const Vec3& n, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  return {{c + t * n.x * n.x, t * n.x * n.y - s * n.z, t * n.x * n.z + s * n.y,
           t * n.x * n.y + s * n.z, c + t * n.y * n.y, t * n.y * n.z - s * n.x,
           t * n.x * n.z - s * n.y, t * n.y * n.z + s * n.x,
           c + t * n.z * n.z}};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {normalized(a.rotation * b.rotation), a.apply(b.translation)};
}

RigidTransform inverse(const RigidTransform& t) {
  const Quat r = conjugate(t.rotation);
  return {r, -rotate(r, t.translation)};
}

Mat3 rotation_from_to(const Vec3& a, const Vec3& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na <= kEpsilon || nb <= kEpsilon) {
    throw Error(ErrorCode::kDegenerateDirection,
                "rotation_from_to needs two nonzero directions");
  }
  const Vec3 ua = a / na;
  const Vec3 ub = b / nb;
  const double c = dot(ua, ub);
  const Vec3 axis = cross(ua, ub);

  if (c < 0.0 && norm(axis) <= 1e-12) {
    // Half turn about an axis orthogonal to a.
    Vec3 e{1, 0, 0};
    const double ax = std::abs(ua.x), ay = std::abs(ua.y), az = std::abs(ua.z);
    if (ay < ax && ay <= az) {
      e = {0, 1, 0};
    } else if (az < ax && az < ay) {
      e = {0, 0, 1};
    }
    const Vec3 n = normalized(cross(ua, e));
    return 2.0 * Mat3::outer(n, n) - Mat3::identity();
  }

  // Half-way quaternion (1 + a·b, a × b), normalized.
  return to_matrix(normalized(Quat{1.0 + c, axis.x, axis.y, axis.z}));
}

Mat3 frame_from_primary_secondary(const Vec3& primary, const Vec3& secondary) {
  const double np = norm(primary);
  if (np <= kEpsilon) {
    throw Error(ErrorCode::kDegenerateDirection, "primary axis is degenerate");
  }
  const double ns = norm(secondary);
  if (ns <= kEpsilon) {
    throw Error(ErrorCode::kParallelAxes, "secondary axis is degenerate");
  }
  const Vec3 y = primary / np;
  const Vec3 s = secondary / ns;
  const Vec3 perp = s - dot(s, y) * y;
  // |perp| is the sine of the angle between the two lines.
  if (norm(perp) <= std::sin(kParallelAngleTolerance)) {
    throw Error(ErrorCode::kParallelAxes,
                "secondary axis is parallel to the primary axis");
  }
  const Vec3 z = normalized(perp);
  const Vec3 x = cross(y, z);
  return Mat3::from_columns(x, y, z);
}

Vec3 project_on_line(const Vec3& p, const Vec3& origin, const Vec3& dir) {
  const double n = norm(dir);
  if (n <= kEpsilon) {
    throw Error(ErrorCode::kDegenerateDirection, "line direction is degenerate");
  }
  const Vec3 d = dir / n;
  return origin + dot(p - origin, d) * d;
}

}  // namespace vskin
