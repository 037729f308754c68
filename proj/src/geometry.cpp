// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/geometry.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace rissim {

Vec3 normalized(Vec3 a)
{
    const double n = norm(a);
    if (n == 0.0)
        throw std::invalid_argument("normalized: zero-length vector");
    return (1.0 / n) * a;
}

Box Box::centered(Vec3 center, Vec3 extents)
{
    const Vec3 half = 0.5 * extents;
    return {center - half, center + half};
}

// Slab test on the parametric segment a + t (b - a), t in [0, 1].
bool segment_intersects_box(Vec3 a, Vec3 b, const Box &box)
{
    const std::array<double, 3> origin{a.x, a.y, a.z};
    const std::array<double, 3> delta{b.x - a.x, b.y - a.y, b.z - a.z};
    const std::array<double, 3> lo{box.lo.x, box.lo.y, box.lo.z};
    const std::array<double, 3> hi{box.hi.x, box.hi.y, box.hi.z};

    double t_enter = 0.0;
    double t_exit = 1.0;
    for (std::size_t i = 0; i < 3; ++i) {
        if (delta[i] == 0.0) {
            if (origin[i] < lo[i] || origin[i] > hi[i])
                return false;
            continue;
        }
        double t0 = (lo[i] - origin[i]) / delta[i];
        double t1 = (hi[i] - origin[i]) / delta[i];
        if (t0 > t1)
            std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
        if (t_enter > t_exit)
            return false;
    }
    return true;
}

Direction arrival_direction(const ArrayPose &pose, Vec3 source)
{
    const Vec3 d = normalized(source - pose.position);
    const double along = dot(d, pose.broadside());
    const double across = dot(d, pose.horizontal());
    return {std::atan2(across, along), std::asin(std::clamp(d.z, -1.0, 1.0))};
}

} // namespace rissim
