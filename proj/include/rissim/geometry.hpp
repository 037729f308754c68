// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#pragma once

#include <cmath>

namespace rissim {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3 &, const Vec3 &) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }
inline Vec3 cross(Vec3 a, Vec3 b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Vec3 normalized(Vec3 a);

/// Axis-aligned box given by its two extreme corners (lo <= hi component-wise).
struct Box {
    Vec3 lo;
    Vec3 hi;

    static Box centered(Vec3 center, Vec3 extents);
    Vec3 center() const { return 0.5 * (lo + hi); }
    friend bool operator==(const Box &, const Box &) = default;
};

/// True if the closed segment a->b passes through the interior or surface of the box.
bool segment_intersects_box(Vec3 a, Vec3 b, const Box &box);

/// Placement of a vertical planar array (or camera) with a horizontal boresight.
///
/// The local frame has broadside along (cos yaw, sin yaw, 0), the horizontal
/// axis along (-sin yaw, cos yaw, 0) and the vertical axis along +z. Azimuth is
/// measured from broadside toward the horizontal axis, elevation from the
/// horizontal plane toward +z.
struct ArrayPose {
    Vec3 position;
    double yaw_rad = 0.0;

    Vec3 broadside() const { return {std::cos(yaw_rad), std::sin(yaw_rad), 0.0}; }
    Vec3 horizontal() const { return {-std::sin(yaw_rad), std::cos(yaw_rad), 0.0}; }
};

struct Direction {
    double azimuth_rad = 0.0;
    double elevation_rad = 0.0;
};

/// Angle of arrival at the array for a wave coming from `source`.
Direction arrival_direction(const ArrayPose &pose, Vec3 source);

} // namespace rissim
