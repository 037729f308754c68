// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace rissim {

namespace {

constexpr double kNearPlane = 0.1;

struct CameraFrame {
    Vec3 forward;
    Vec3 right;
    Vec3 down;
};

CameraFrame camera_frame(const CameraModel &cam)
{
    const double cp = std::cos(cam.pitch_rad);
    const Vec3 forward{cp * std::cos(cam.yaw_rad), cp * std::sin(cam.yaw_rad), std::sin(cam.pitch_rad)};
    const Vec3 right{std::sin(cam.yaw_rad), -std::cos(cam.yaw_rad), 0.0};
    return {forward, right, cross(forward, right)};
}

std::array<Vec3, 8> corners(const Box &b)
{
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i)
        out[static_cast<std::size_t>(i)] = {(i & 1) ? b.hi.x : b.lo.x, (i & 2) ? b.hi.y : b.lo.y,
                                            (i & 4) ? b.hi.z : b.lo.z};
    return out;
}

bool segment_clear(Vec3 a, Vec3 b, std::span<const Box> blockers)
{
    for (const Box &box : blockers)
        if (segment_intersects_box(a, b, box))
            return false;
    return true;
}

// Clamp an edge-form box to the image and convert to center form; empty boxes vanish.
std::optional<BBox> clamp_edges(double x0, double y0, double x1, double y1, const CameraModel &cam)
{
    x0 = std::clamp(x0, 0.0, static_cast<double>(cam.image_w));
    x1 = std::clamp(x1, 0.0, static_cast<double>(cam.image_w));
    y0 = std::clamp(y0, 0.0, static_cast<double>(cam.image_h));
    y1 = std::clamp(y1, 0.0, static_cast<double>(cam.image_h));
    if (!(x1 > x0) || !(y1 > y0))
        return std::nullopt;
    return BBox{0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
}

} // namespace

std::vector<VehicleClass> default_vehicle_classes()
{
    return {
        {"car", {4.5, 1.8, 1.5}, 0.7},
        {"bus", {12.0, 2.5, 3.2}, 0.15},
        {"truck", {8.0, 2.5, 3.6}, 0.15},
    };
}

void SceneConfig::validate() const
{
    if (lanes_y.empty())
        throw std::invalid_argument("SceneConfig: at least one lane is required");
    if (!(slot_spacing > 0.0) || slot_x_max < slot_x_min)
        throw std::invalid_argument("SceneConfig: bad slot grid");
    if (classes.empty())
        throw std::invalid_argument("SceneConfig: no vehicle classes");
    if (max_ues < 0 || max_ues > u_max)
        throw std::invalid_argument("SceneConfig: max_ues must lie in [0, u_max]");
    if (!(ue_count_mean >= 0.0))
        throw std::invalid_argument("SceneConfig: ue_count_mean must be >= 0");
    if (max_attempts < 1)
        throw std::invalid_argument("SceneConfig: max_attempts must be >= 1");
}

std::size_t SceneConfig::slots_per_lane() const
{
    return static_cast<std::size_t>(std::floor((slot_x_max - slot_x_min) / slot_spacing + 1e-9)) + 1;
}

bool has_bs_los(const Scene &scene, const SceneUE &ue)
{
    return segment_clear(ue.antenna(), scene.bs_pos, scene.blockers);
}

Scene generate_scene(const SceneConfig &config, std::uint64_t seed)
{
    config.validate();

    Scene scene;
    scene.blockers = config.blockers;
    scene.reflectors = config.reflectors;
    scene.ris_pose = config.ris_pose;
    scene.bs_pos = config.bs_pos;
    scene.seed = seed;

    const std::size_t slots = config.slots_per_lane();
    const std::size_t cells = slots * config.lanes_y.size();

    std::vector<double> weights;
    for (const VehicleClass &c : config.classes)
        weights.push_back(c.weight);

    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> count_dist(config.ue_count_mean);
    std::discrete_distribution<int> class_dist(weights.begin(), weights.end());
    std::vector<std::size_t> cell_order(cells);

    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        const int drawn = config.ue_count_mean > 0.0 ? count_dist(rng) : 0;
        const std::size_t n = std::min<std::size_t>({static_cast<std::size_t>(drawn),
                                                     static_cast<std::size_t>(config.max_ues), cells});
        std::iota(cell_order.begin(), cell_order.end(), std::size_t{0});
        std::shuffle(cell_order.begin(), cell_order.end(), rng);

        scene.ues.clear();
        bool all_blocked = true;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lane = cell_order[i] / slots;
            const std::size_t slot = cell_order[i] % slots;
            const int cls = class_dist(rng);
            const Vec3 size = config.classes[static_cast<std::size_t>(cls)].size;
            SceneUE ue{{config.slot_x_min + static_cast<double>(slot) * config.slot_spacing, config.lanes_y[lane],
                        0.5 * size.z},
                       size,
                       cls};
            all_blocked = all_blocked && !has_bs_los(scene, ue);
            scene.ues.push_back(ue);
        }
        if (!config.blocked_only || all_blocked)
            return scene;
    }
    throw std::runtime_error("generate_scene: no scene with fully blocked BS-UE paths after " +
                             std::to_string(config.max_attempts) + " attempts");
}

void CameraModel::validate() const
{
    if (!(fov_deg > 0.0 && fov_deg < 180.0))
        throw std::invalid_argument("CameraModel: fov must lie in (0, 180) degrees");
    if (image_w <= 0 || image_h <= 0)
        throw std::invalid_argument("CameraModel: image dimensions must be positive");
}

double CameraModel::focal_px() const
{
    return 0.5 * image_w / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
}

PixelPoint project(const CameraModel &cam, Vec3 point)
{
    const CameraFrame f = camera_frame(cam);
    const Vec3 rel = point - cam.position;
    const double depth = dot(rel, f.forward);
    if (depth <= 0.0)
        return {0.0, 0.0, depth};
    const double fpx = cam.focal_px();
    return {0.5 * cam.image_w + fpx * dot(rel, f.right) / depth, 0.5 * cam.image_h + fpx * dot(rel, f.down) / depth,
            depth};
}

std::optional<BBox> project_box(const CameraModel &cam, const Box &box)
{
    double x0 = std::numeric_limits<double>::infinity();
    double y0 = x0;
    double x1 = -x0;
    double y1 = -x0;
    for (const Vec3 &c : corners(box)) {
        const PixelPoint p = project(cam, c);
        if (p.depth <= kNearPlane)
            return std::nullopt;
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return clamp_edges(x0, y0, x1, y1, cam);
}

bool ue_in_view(const Scene &scene, const CameraModel &cam, const SceneUE &ue)
{
    const PixelPoint c = project(cam, ue.position);
    if (c.depth <= kNearPlane || c.x < 0.0 || c.x > cam.image_w || c.y < 0.0 || c.y > cam.image_h)
        return false;
    return segment_clear(cam.position, ue.position, scene.blockers);
}

std::vector<std::size_t> ues_in_view(const Scene &scene, const CameraModel &cam)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scene.ues.size(); ++i)
        if (ue_in_view(scene, cam, scene.ues[i]))
            out.push_back(i);
    return out;
}

std::vector<DetectedUE> project_detect(const Scene &scene, const CameraModel &cam, const DetectorNoise &noise,
                                       std::uint64_t seed, int num_classes)
{
    cam.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<DetectedUE> out;
    for (const SceneUE &ue : scene.ues) {
        // Draw the same number of variates per UE so noise streams stay aligned.
        const double miss_draw = unit(rng);
        std::array<double, 4> e{};
        for (double &v : e)
            v = noise.jitter_px * jitter(rng);

        if (!ue_in_view(scene, cam, ue))
            continue;
        const auto clean = project_box(cam, ue.box());
        if (!clean || miss_draw < noise.miss_prob)
            continue;
        const double hw = 0.5 * clean->width;
        const double hh = 0.5 * clean->height;
        auto noisy = clamp_edges(clean->x_center - hw + e[0], clean->y_center - hh + e[1],
                                 clean->x_center + hw + e[2], clean->y_center + hh + e[3], cam);
        if (!noisy)
            noisy = clean;
        out.push_back({ue.class_id, *noisy});
    }

    if (noise.false_alarm_rate > 0.0) {
        std::poisson_distribution<int> clutter_count(noise.false_alarm_rate);
        std::uniform_int_distribution<int> clutter_class(0, num_classes - 1);
        const int n = clutter_count(rng);
        for (int i = 0; i < n; ++i) {
            const int cls = clutter_class(rng);
            const double xc = unit(rng) * cam.image_w;
            const double yc = unit(rng) * cam.image_h;
            const double w = 20.0 + 100.0 * unit(rng);
            const double h = w * (0.4 + 0.4 * unit(rng));
            if (auto b = clamp_edges(xc - 0.5 * w, yc - 0.5 * h, xc + 0.5 * w, yc + 0.5 * h, cam))
                out.push_back({cls, *b});
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const DetectedUE &a, const DetectedUE &b) {
        if (a.bbox.x_center != b.bbox.x_center)
            return a.bbox.x_center < b.bbox.x_center;
        return a.bbox.y_center < b.bbox.y_center;
    });
    return out;
}

std::vector<int> match_detections(const Scene &scene, const CameraModel &cam, std::span<const DetectedUE> dets,
                                  double max_px)
{
    const std::vector<std::size_t> visible = ues_in_view(scene, cam);
    std::vector<int> out;
    out.reserve(dets.size());
    for (const DetectedUE &d : dets) {
        int best = -1;
        double best_dist = max_px;
        for (std::size_t i : visible) {
            const auto b = project_box(cam, scene.ues[i].box());
            if (!b)
                continue;
            const double dist = std::hypot(b->x_center - d.bbox.x_center, b->y_center - d.bbox.y_center);
            if (dist <= best_dist) {
                best_dist = dist;
                best = static_cast<int>(i);
            }
        }
        out.push_back(best);
    }
    return out;
}

UEInfoMatrix::UEInfoMatrix(int num_classes, int u_max)
    : num_classes_(num_classes), u_max_(u_max)
{
    if (num_classes < 1 || u_max < 1)
        throw std::invalid_argument("UEInfoMatrix: C and U_max must be >= 1");
    data_.assign(static_cast<std::size_t>(u_max) * static_cast<std::size_t>(feature_dim()), 0.0);
}

std::span<const double> UEInfoMatrix::column(int u) const
{
    return {data_.data() + static_cast<std::size_t>(u) * feature_dim(), static_cast<std::size_t>(feature_dim())};
}

std::span<double> UEInfoMatrix::column(int u)
{
    return {data_.data() + static_cast<std::size_t>(u) * feature_dim(), static_cast<std::size_t>(feature_dim())};
}

UEInfoMatrix encode_ue_info(std::span<const DetectedUE> dets, const CameraModel &cam, int num_classes, int u_max)
{
    cam.validate();
    UEInfoMatrix V(num_classes, u_max);
    for (const DetectedUE &d : dets)
        if (d.class_id < 0 || d.class_id >= num_classes)
            throw std::invalid_argument("encode_ue_info: class id " + std::to_string(d.class_id) +
                                        " outside [0, " + std::to_string(num_classes) + ")");

    const int n = std::min<int>(static_cast<int>(dets.size()), u_max);
    V.set_truncated(static_cast<int>(dets.size()) > u_max);
    V.set_valid_count(n);
    const double w = cam.image_w;
    const double h = cam.image_h;
    for (int u = 0; u < n; ++u) {
        const DetectedUE &d = dets[static_cast<std::size_t>(u)];
        auto col = V.column(u);
        col[static_cast<std::size_t>(d.class_id)] = 1.0;
        const std::size_t off = static_cast<std::size_t>(num_classes);
        col[off + 0] = std::clamp(d.bbox.x_center / w, 0.0, 1.0);
        col[off + 1] = std::clamp(d.bbox.y_center / h, 0.0, 1.0);
        col[off + 2] = std::clamp(d.bbox.width / w, 0.0, 1.0);
        col[off + 3] = std::clamp(d.bbox.height / h, 0.0, 1.0);
    }
    return V;
}

} // namespace rissim
