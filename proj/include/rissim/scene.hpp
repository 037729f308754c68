// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// Synthetic street scenes seen by the RIS cameras, a geometric stand-in for
// an object detector, and the padded per-UE feature matrix fed to the
// beam-set network.

#pragma once

#include "rissim/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rissim {

struct VehicleClass {
    std::string name;
    Vec3 size;           ///< length (x), width (y), height (z) in meters
    double weight = 1.0; ///< relative sampling frequency
};

/// Default classes: car, bus, truck.
std::vector<VehicleClass> default_vehicle_classes();

struct SceneConfig {
    std::vector<double> lanes_y{6.0, 9.5, 13.0, 16.5};
    double slot_x_min = -30.0;
    double slot_x_max = 45.0;
    double slot_spacing = 2.5;

    double ue_count_mean = 2.0; ///< Poisson mean, truncated at max_ues
    int max_ues = 6;
    int u_max = 8;              ///< capacity of the UE information matrix

    std::vector<VehicleClass> classes = default_vehicle_classes();

    ArrayPose ris_pose{{0.0, 0.0, 10.0}, 1.5707963267948966};
    Vec3 bs_pos{0.0, 90.0, 10.0};
    std::vector<Box> blockers{{{-150.0, 22.0, 0.0}, {150.0, 70.0, 7.0}}};
    std::vector<Vec3> reflectors{{-20.0, 22.0, 4.0}, {10.0, 22.0, 4.0}, {35.0, 22.0, 4.0}, {0.0, -1.0, 3.0}};

    bool blocked_only = true;
    int max_attempts = 1000;

    /// Throws std::invalid_argument for infeasible settings (e.g. zero lanes).
    void validate() const;
    std::size_t slots_per_lane() const;
};

struct SceneUE {
    Vec3 position; ///< box center
    Vec3 size;
    int class_id = 0;

    Box box() const { return Box::centered(position, size); }
    /// Antenna on the roof center.
    Vec3 antenna() const { return {position.x, position.y, position.z + 0.5 * size.z}; }
    friend bool operator==(const SceneUE &, const SceneUE &) = default;
};

struct Scene {
    std::vector<SceneUE> ues;
    std::vector<Box> blockers;
    std::vector<Vec3> reflectors;
    ArrayPose ris_pose;
    Vec3 bs_pos;
    std::uint64_t seed = 0;

    friend bool operator==(const Scene &a, const Scene &b)
    {
        return a.ues == b.ues && a.blockers == b.blockers && a.reflectors == b.reflectors &&
               a.ris_pose.position == b.ris_pose.position && a.ris_pose.yaw_rad == b.ris_pose.yaw_rad &&
               a.bs_pos == b.bs_pos && a.seed == b.seed;
    }
};

/// True if the straight segment between the UE antenna and the BS crosses no blocker.
bool has_bs_los(const Scene &scene, const SceneUE &ue);

Scene generate_scene(const SceneConfig &config, std::uint64_t seed);

struct CameraModel {
    Vec3 position;
    double yaw_rad = 0.0;
    double pitch_rad = 0.0; ///< negative looks down
    double fov_deg = 90.0;  ///< horizontal
    int image_w = 640;
    int image_h = 360;

    void validate() const;
    double focal_px() const;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0; ///< along the optical axis; <= 0 means behind the camera
};

PixelPoint project(const CameraModel &cam, Vec3 point);

struct BBox {
    double x_center = 0.0;
    double y_center = 0.0;
    double width = 0.0;
    double height = 0.0;

    friend bool operator==(const BBox &, const BBox &) = default;
};

struct DetectedUE {
    int class_id = 0;
    BBox bbox;

    friend bool operator==(const DetectedUE &, const DetectedUE &) = default;
};

struct DetectorNoise {
    double jitter_px = 2.0;
    double miss_prob = 0.05;
    double false_alarm_rate = 0.02; ///< mean clutter detections per frame

    static DetectorNoise none() { return {0.0, 0.0, 0.0}; }
};

/// Noise-free projected bounding box of the UE's 3D box, or nothing if any
/// corner lies behind the camera or the clamped box is empty.
std::optional<BBox> project_box(const CameraModel &cam, const Box &box);

/// A UE is in view when its box center projects inside the image and the
/// camera-to-center segment is not blocked.
bool ue_in_view(const Scene &scene, const CameraModel &cam, const SceneUE &ue);

/// Indices of the scene UEs in view of the camera, in scene order.
std::vector<std::size_t> ues_in_view(const Scene &scene, const CameraModel &cam);

/// Synthetic detector: in-view UEs yield jittered projected boxes, each
/// missed with probability miss_prob; Poisson clutter is added. Output is
/// sorted by x_center.
std::vector<DetectedUE> project_detect(const Scene &scene, const CameraModel &cam, const DetectorNoise &noise,
                                       std::uint64_t seed, int num_classes = 3);

/// Nearest-projected-center association of detections to in-view scene UEs;
/// -1 marks a detection with no in-view UE within `max_px`.
std::vector<int> match_detections(const Scene &scene, const CameraModel &cam,
                                  std::span<const DetectedUE> dets, double max_px = 40.0);

/// Padded per-UE feature matrix: U_max columns of [one-hot class | bbox / (w, h, w, h)].
class UEInfoMatrix {
public:
    UEInfoMatrix(int num_classes, int u_max);

    int num_classes() const { return num_classes_; }
    int u_max() const { return u_max_; }
    int feature_dim() const { return num_classes_ + 4; }
    int valid_count() const { return valid_count_; }
    bool truncated() const { return truncated_; }

    std::span<const double> column(int u) const;
    std::span<double> column(int u);
    std::span<const double> data() const { return data_; }

    void set_valid_count(int n) { valid_count_ = n; }
    void set_truncated(bool t) { truncated_ = t; }

    friend bool operator==(const UEInfoMatrix &, const UEInfoMatrix &) = default;

private:
    int num_classes_;
    int u_max_;
    int valid_count_ = 0;
    bool truncated_ = false;
    std::vector<double> data_; ///< column-major, u_max * feature_dim
};

/// Excess detections beyond U_max are dropped and flagged via truncated().
/// Throws std::invalid_argument for class ids outside [0, C).
UEInfoMatrix encode_ue_info(std::span<const DetectedUE> dets, const CameraModel &cam, int num_classes, int u_max);

} // namespace rissim
