// Copyright 2026 The pinnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"

namespace pinnmpc {

/// Scalar-first Hamilton quaternion (w, x, y, z).
using Quaternion = Eigen::Vector4d;

inline constexpr double kUnitQuaternionTolerance = 1e-6;

inline Quaternion identity_quaternion() { return Quaternion(1.0, 0.0, 0.0, 0.0); }

/// Hamilton product a ⊗ b.
inline Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  const Eigen::Vector3d av = a.tail<3>();
  const Eigen::Vector3d bv = b.tail<3>();
  Quaternion r;
  r[0] = a[0] * b[0] - av.dot(bv);
  r.tail<3>() = a[0] * bv + b[0] * av + av.cross(bv);
  return r;
}

inline Quaternion quat_conjugate(const Quaternion& q) {
  return Quaternion(q[0], -q[1], -q[2], -q[3]);
}

inline bool is_unit_quaternion(const Quaternion& q,
                               double tol = kUnitQuaternionTolerance) {
  return std::abs(q.norm() - 1.0) <= tol;
}

inline void require_unit_quaternion(const Quaternion& q) {
  if (!is_unit_quaternion(q)) {
    throw NormalizationError("quaternion norm " + std::to_string(q.norm()) +
                             " is not 1");
  }
}

/// Rotation q v q̄ for any nonzero q; the quaternion is normalized first.
inline Eigen::Vector3d rotate_vector_normalized(const Quaternion& q,
                                                const Eigen::Vector3d& v) {
  const Quaternion u = q / q.norm();
  const Eigen::Vector3d axis = u.tail<3>();
  const Eigen::Vector3d t = 2.0 * axis.cross(v);
  return v + u[0] * t + axis.cross(t);
}

/// Rotation q v q̄ of a vector by a unit quaternion.
inline Eigen::Vector3d rotate_vector(const Quaternion& q,
                                     const Eigen::Vector3d& v) {
  require_unit_quaternion(q);
  return rotate_vector_normalized(q, v);
}

/// Unit quaternion for a rotation of `angle` radians about `axis`.
inline Quaternion quat_from_axis_angle(const Eigen::Vector3d& axis,
                                       double angle) {
  Quaternion q;
  q[0] = std::cos(0.5 * angle);
  q.tail<3>() = std::sin(0.5 * angle) * axis.normalized();
  return q;
}

/// Z-Y-X (yaw, pitch, roll) Euler angles to a unit quaternion.
inline Quaternion quat_from_euler(double roll, double pitch, double yaw) {
  const double cr = std::cos(0.5 * roll), sr = std::sin(0.5 * roll);
  const double cp = std::cos(0.5 * pitch), sp = std::sin(0.5 * pitch);
  const double cy = std::cos(0.5 * yaw), sy = std::sin(0.5 * yaw);
  return Quaternion(cr * cp * cy + sr * sp * sy, sr * cp * cy - cr * sp * sy,
                    cr * sp * cy + sr * cp * sy, cr * cp * sy - sr * sp * cy);
}

}  // namespace pinnmpc
