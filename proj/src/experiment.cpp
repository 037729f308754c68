// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/experiment.hpp"

#include "rissim/textio.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <numbers>
#include <sstream>

namespace rissim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

constexpr std::uint64_t kStreamBsChannel = 1;
constexpr std::uint64_t kStreamUeChannel = 2;
constexpr std::uint64_t kStreamDetector = 3;
constexpr std::uint64_t kStreamProtocol = 4;

constexpr const char *kDatasetFormat = "rissim-dataset v1";
constexpr const char *kModelsFormat = "rissim-models v1";

// ---------------------------------------------------------------- json helpers

json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json &j, const std::string &where)
{
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json box_json(const Box &b) { return json::array({vec3_json(b.lo), vec3_json(b.hi)}); }

Box box_from(const json &j, const std::string &where)
{
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument(where + ": expected [[lo], [hi]]");
    return {vec3_from(j[0], where), vec3_from(j[1], where)};
}

void check_keys(const json &j, std::initializer_list<std::string_view> allowed, const std::string &where)
{
    if (!j.is_object())
        throw std::invalid_argument(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
}

template <class T>
void read_opt(const json &j, const char *key, T &out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

json cluster_json(const PathCluster &c)
{
    return {{"gain", json::array({c.gain.real(), c.gain.imag()})},
            {"delay_s", c.delay_s},
            {"az", c.azimuth_rad},
            {"el", c.elevation_rad}};
}

PathCluster cluster_from(const json &j)
{
    const json &g = j.at("gain");
    return {cplx(g.at(0).get<double>(), g.at(1).get<double>()), j.at("delay_s").get<double>(),
            j.at("az").get<double>(), j.at("el").get<double>()};
}

json clusters_json(const std::vector<PathCluster> &cs)
{
    json arr = json::array();
    for (const PathCluster &c : cs)
        arr.push_back(cluster_json(c));
    return arr;
}

std::vector<PathCluster> clusters_from(const json &j)
{
    std::vector<PathCluster> out;
    for (const json &c : j)
        out.push_back(cluster_from(c));
    return out;
}

// ---------------------------------------------------------------- config <-> json

json scene_json(const SceneConfig &s)
{
    json classes = json::array();
    for (const VehicleClass &c : s.classes)
        classes.push_back({{"name", c.name}, {"size", vec3_json(c.size)}, {"weight", c.weight}});
    json blockers = json::array();
    for (const Box &b : s.blockers)
        blockers.push_back(box_json(b));
    json reflectors = json::array();
    for (const Vec3 &r : s.reflectors)
        reflectors.push_back(vec3_json(r));
    return {{"lanes_y", s.lanes_y},
            {"slot_x_min", s.slot_x_min},
            {"slot_x_max", s.slot_x_max},
            {"slot_spacing", s.slot_spacing},
            {"ue_count_mean", s.ue_count_mean},
            {"max_ues", s.max_ues},
            {"u_max", s.u_max},
            {"classes", classes},
            {"ris_position", vec3_json(s.ris_pose.position)},
            {"ris_yaw_deg", s.ris_pose.yaw_rad / kDeg},
            {"bs_position", vec3_json(s.bs_pos)},
            {"blockers", blockers},
            {"reflectors", reflectors},
            {"blocked_only", s.blocked_only},
            {"max_attempts", s.max_attempts}};
}

void scene_apply(const json &j, SceneConfig &s)
{
    check_keys(j,
               {"lanes_y", "slot_x_min", "slot_x_max", "slot_spacing", "ue_count_mean", "max_ues", "u_max",
                "classes", "ris_position", "ris_yaw_deg", "bs_position", "blockers", "reflectors", "blocked_only",
                "max_attempts"},
               "scene");
    read_opt(j, "lanes_y", s.lanes_y);
    read_opt(j, "slot_x_min", s.slot_x_min);
    read_opt(j, "slot_x_max", s.slot_x_max);
    read_opt(j, "slot_spacing", s.slot_spacing);
    read_opt(j, "ue_count_mean", s.ue_count_mean);
    read_opt(j, "max_ues", s.max_ues);
    read_opt(j, "u_max", s.u_max);
    read_opt(j, "blocked_only", s.blocked_only);
    read_opt(j, "max_attempts", s.max_attempts);
    if (j.contains("classes")) {
        s.classes.clear();
        for (const json &c : j.at("classes")) {
            check_keys(c, {"name", "size", "weight"}, "scene.classes");
            s.classes.push_back(
                {c.at("name").get<std::string>(), vec3_from(c.at("size"), "scene.classes.size"), c.value("weight", 1.0)});
        }
    }
    if (j.contains("ris_position"))
        s.ris_pose.position = vec3_from(j.at("ris_position"), "scene.ris_position");
    if (j.contains("ris_yaw_deg"))
        s.ris_pose.yaw_rad = j.at("ris_yaw_deg").get<double>() * kDeg;
    if (j.contains("bs_position"))
        s.bs_pos = vec3_from(j.at("bs_position"), "scene.bs_position");
    if (j.contains("blockers")) {
        s.blockers.clear();
        for (const json &b : j.at("blockers"))
            s.blockers.push_back(box_from(b, "scene.blockers"));
    }
    if (j.contains("reflectors")) {
        s.reflectors.clear();
        for (const json &r : j.at("reflectors"))
            s.reflectors.push_back(vec3_from(r, "scene.reflectors"));
    }
}

json codebook_spec_json(const DftCodebookSpec &c)
{
    return {{"oversample_az", c.oversample_az}, {"oversample_el", c.oversample_el}, {"phase_bits", c.phase_bits}};
}

void codebook_spec_apply(const json &j, DftCodebookSpec &c, const std::string &where)
{
    check_keys(j, {"oversample_az", "oversample_el", "phase_bits"}, where);
    read_opt(j, "oversample_az", c.oversample_az);
    read_opt(j, "oversample_el", c.oversample_el);
    read_opt(j, "phase_bits", c.phase_bits);
}

json camera_json(const CameraSpec &c)
{
    return {{"name", c.name},
            {"position", vec3_json(c.model.position)},
            {"yaw_deg", c.model.yaw_rad / kDeg},
            {"pitch_deg", c.model.pitch_rad / kDeg},
            {"fov_deg", c.model.fov_deg},
            {"image_w", c.model.image_w},
            {"image_h", c.model.image_h}};
}

CameraSpec camera_from(const json &j)
{
    check_keys(j, {"name", "position", "yaw_deg", "pitch_deg", "fov_deg", "image_w", "image_h"}, "cameras");
    CameraSpec c;
    c.name = j.at("name").get<std::string>();
    c.model.position = vec3_from(j.at("position"), "cameras.position");
    c.model.yaw_rad = j.value("yaw_deg", 0.0) * kDeg;
    c.model.pitch_rad = j.value("pitch_deg", 0.0) * kDeg;
    read_opt(j, "fov_deg", c.model.fov_deg);
    read_opt(j, "image_w", c.model.image_w);
    read_opt(j, "image_h", c.model.image_h);
    return c;
}

json config_json(const ExperimentConfig &c)
{
    json cams = json::array();
    for (const CameraSpec &cam : c.cameras)
        cams.push_back(camera_json(cam));
    const AccessConfig &a = c.protocol.access;
    return {
        {"seed", c.seed},
        {"num_scenes", c.num_scenes},
        {"train_fraction", c.train_fraction},
        {"out_dir", c.out_dir.string()},
        {"scene", scene_json(c.scene)},
        {"array", {{"rows", c.array.rows}, {"cols", c.array.cols}, {"spacing", c.array.spacing}}},
        {"channel",
         {{"subcarriers", c.wideband.subcarriers},
          {"sample_period_s", c.wideband.sample_period_s},
          {"max_delay_taps", c.wideband.max_delay_taps},
          {"pathloss", c.wideband.pathloss},
          {"pulse", c.wideband.pulse == PulseShape::Sinc ? "sinc" : "raised_cosine"},
          {"rolloff", c.wideband.rolloff},
          {"wavelength_m", c.wavelength_m},
          {"reflection_amplitude", c.reflection_amplitude}}},
        {"ue_codebook", codebook_spec_json(c.ue_codebook)},
        {"bs_codebook", codebook_spec_json(c.bs_codebook)},
        {"cameras", cams},
        {"detector",
         {{"jitter_px", c.detector.jitter_px},
          {"miss_prob", c.detector.miss_prob},
          {"false_alarm_rate", c.detector.false_alarm_rate}}},
        {"train",
         {{"learning_rate", c.train.learning_rate},
          {"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs},
          {"momentum", c.train.momentum},
          {"seed", c.train.seed},
          {"threshold", c.train.threshold},
          {"hidden", c.train.hidden}}},
        {"protocol",
         {{"ssb_period_ms", a.ssb_period_ms},
          {"prach_offset_ms", a.prach_offset_ms},
          {"msg_latency_ms", a.msg_latency_ms},
          {"detect_threshold_db", a.detect_threshold_db},
          {"ssb_miss_prob", a.ssb_miss_prob},
          {"dwell_cycles", c.protocol.dwell_cycles},
          {"snr_db", c.protocol.snr_db},
          {"runs", c.protocol.runs},
          {"set_size", c.protocol.set_size}}},
        {"eval", {{"snr_db", c.eval.snr_db}, {"rate_snr_db", c.eval.rate_snr_db}, {"k_values", c.eval.k_values}}},
        {"data_fractions", c.data_fractions},
    };
}

// ---------------------------------------------------------------- file helpers

json read_json_file(const fs::path &path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception &e) {
        throw PipelineError(e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::exception &e) {
        throw PipelineError(path.string() + ": " + e.what());
    }
}

std::vector<json> read_jsonl_file(const fs::path &path)
{
    std::vector<json> out;
    std::istringstream is(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception &e) {
            throw PipelineError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_out(const fs::path &path, std::string_view text)
{
    try {
        write_file(path, text);
    } catch (const std::exception &e) {
        throw PipelineError(e.what());
    }
}

void ensure_dir(const fs::path &dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw PipelineError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string codebook_text(const PhaseCodebook &cb)
{
    std::ostringstream os;
    write_codebook(os, cb);
    return os.str();
}

PhaseCodebook make_ue_codebook(const ExperimentConfig &c) { return make_dft_codebook(c.array, c.ue_codebook); }
PhaseCodebook make_bs_codebook(const ExperimentConfig &c) { return make_dft_codebook(c.array, c.bs_codebook); }

std::string records_file(const std::string &camera) { return "records_" + camera + ".jsonl"; }

json record_json(const CameraRecord &r)
{
    json dets = json::array();
    for (const DetectedUE &d : r.detections)
        dets.push_back({{"class", d.class_id},
                        {"bbox", json::array({d.bbox.x_center, d.bbox.y_center, d.bbox.width, d.bbox.height})}});
    return {{"scene", r.scene_index},
            {"detections", dets},
            {"matched", r.matched_ue},
            {"valid_count", r.V.valid_count()},
            {"truncated", r.V.truncated()},
            {"V", std::vector<double>(r.V.data().begin(), r.V.data().end())},
            {"target", std::vector<std::size_t>(r.target.indices().begin(), r.target.indices().end())}};
}

CameraRecord record_from(const json &j, int num_classes, int u_max)
{
    CameraRecord r;
    r.scene_index = j.at("scene").get<std::size_t>();
    for (const json &d : j.at("detections")) {
        const json &b = d.at("bbox");
        r.detections.push_back({d.at("class").get<int>(),
                                {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                 b.at(3).get<double>()}});
    }
    r.matched_ue = j.at("matched").get<std::vector<int>>();
    r.V = UEInfoMatrix(num_classes, u_max);
    const auto v = j.at("V").get<std::vector<double>>();
    if (v.size() != r.V.data().size())
        throw PipelineError("record for scene " + std::to_string(r.scene_index) + ": V has wrong size");
    const int dim = r.V.feature_dim();
    for (int u = 0; u < u_max; ++u)
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(u) * dim, dim, r.V.column(u).begin());
    r.V.set_valid_count(j.at("valid_count").get<int>());
    r.V.set_truncated(j.at("truncated").get<bool>());
    r.target = BeamSet(j.at("target").get<std::vector<std::size_t>>());
    return r;
}

json scene_record_json(const SceneRecord &r)
{
    json ues = json::array();
    for (const SceneUE &ue : r.scene.ues)
        ues.push_back({{"position", vec3_json(ue.position)},
                       {"size", vec3_json(ue.size)},
                       {"class", ue.class_id},
                       {"bs_los", has_bs_los(r.scene, ue)}});
    json ue_clusters = json::array();
    for (const auto &cs : r.ue_clusters)
        ue_clusters.push_back(clusters_json(cs));
    return {{"index", r.index},
            {"seed", r.scene.seed},
            {"ues", ues},
            {"bs_clusters", clusters_json(r.bs_clusters)},
            {"ue_clusters", ue_clusters}};
}

SceneRecord scene_record_from(const json &j, const ExperimentConfig &config)
{
    SceneRecord r;
    r.index = j.at("index").get<std::size_t>();
    r.scene.seed = j.at("seed").get<std::uint64_t>();
    r.scene.blockers = config.scene.blockers;
    r.scene.reflectors = config.scene.reflectors;
    r.scene.ris_pose = config.scene.ris_pose;
    r.scene.bs_pos = config.scene.bs_pos;
    for (const json &u : j.at("ues"))
        r.scene.ues.push_back(
            {vec3_from(u.at("position"), "ues.position"), vec3_from(u.at("size"), "ues.size"), u.at("class").get<int>()});
    r.bs_clusters = clusters_from(j.at("bs_clusters"));
    for (const json &cs : j.at("ue_clusters"))
        r.ue_clusters.push_back(clusters_from(cs));
    if (r.ue_clusters.size() != r.scene.ues.size())
        throw PipelineError("scene " + std::to_string(r.index) + ": cluster lists do not match the UE list");
    return r;
}

std::vector<TrainingSample> to_samples(std::span<const CameraRecord> records, std::size_t codebook_size)
{
    std::vector<TrainingSample> out;
    out.reserve(records.size());
    for (const CameraRecord &r : records)
        out.push_back({r.V, MultiHotTarget::from_set(r.target, codebook_size)});
    return out;
}

SetMetrics threshold_metrics(const NetParams &params, std::span<const CameraRecord> records, double threshold)
{
    std::vector<BeamSet> pred;
    std::vector<BeamSet> truth;
    for (const CameraRecord &r : records) {
        pred.push_back(predict_set(params, r.V, PredictMode::threshold_at(threshold)));
        truth.push_back(r.target);
    }
    return eval_metrics(pred, truth);
}

/// |h_k^T psi|^2 for every subcarrier.
std::vector<double> subcarrier_gains(const FreqChannel &composite, const ReflectBeam &psi)
{
    const CVector w = psi.to_vector();
    std::vector<double> g(static_cast<std::size_t>(composite.subcarriers()));
    for (int k = 0; k < composite.subcarriers(); ++k) {
        cplx acc = 0.0;
        const auto h = composite.subcarrier(k);
        for (std::size_t m = 0; m < w.size(); ++m)
            acc += h[m] * w[m];
        g[static_cast<std::size_t>(k)] = std::norm(acc);
    }
    return g;
}

double rate_from_gains(std::span<const double> gains, double snr)
{
    double sum = 0.0;
    for (double g : gains)
        sum += std::log2(1.0 + snr * g);
    return sum / static_cast<double>(gains.size());
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Per-scene channels built on demand and kept for the duration of a command.
class ChannelCache {
public:
    ChannelCache(const Dataset &data) : data_(data) {}

    const SceneChannels &get(std::size_t scene_index)
    {
        auto it = cache_.find(scene_index);
        if (it == cache_.end())
            it = cache_.emplace(scene_index, build_channels(data_.config, data_.scenes.at(scene_index))).first;
        return it->second;
    }

private:
    const Dataset &data_;
    std::map<std::size_t, SceneChannels> cache_;
};

ScoreVector record_scores(const NetParams *params, const CameraRecord &r, std::size_t codebook_size)
{
    if (!params) {
        ScoreVector s;
        s.scores = MultiHotTarget::from_set(r.target, codebook_size).bits;
        return s;
    }
    return forward(*params, r.V);
}

void check_cameras(const ExperimentConfig &config, const Dataset &data)
{
    if (config.cameras.size() != data.config.cameras.size())
        throw PipelineError("configuration and dataset disagree on the camera list");
    for (std::size_t c = 0; c < config.cameras.size(); ++c)
        if (config.cameras[c].name != data.config.cameras[c].name)
            throw PipelineError("camera '" + config.cameras[c].name + "' is not in the dataset");
}

} // namespace

// ==================================================================== config

void ExperimentConfig::validate() const
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("ExperimentConfig: train_fraction must lie in (0, 1)");
    scene.validate();
    wideband.validate();
    if (!(wavelength_m > 0.0))
        throw std::invalid_argument("ExperimentConfig: wavelength_m must be positive");
    if (!(reflection_amplitude >= 0.0))
        throw std::invalid_argument("ExperimentConfig: reflection_amplitude must be >= 0");
    if (array.rows < 1 || array.cols < 1 || !(array.spacing > 0.0))
        throw std::invalid_argument("ExperimentConfig: invalid array geometry");
    if (cameras.empty())
        throw std::invalid_argument("ExperimentConfig: at least one camera is required");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        cameras[i].model.validate();
        if (cameras[i].name.empty() ||
            cameras[i].name.find_first_of("/\\ ") != std::string::npos)
            throw std::invalid_argument("ExperimentConfig: camera names must be non-empty without spaces or slashes");
        for (std::size_t j = 0; j < i; ++j)
            if (cameras[j].name == cameras[i].name)
                throw std::invalid_argument("ExperimentConfig: duplicate camera name '" + cameras[i].name + "'");
    }
    if (!(detector.jitter_px >= 0.0) || !(detector.miss_prob >= 0.0 && detector.miss_prob <= 1.0) ||
        !(detector.false_alarm_rate >= 0.0))
        throw std::invalid_argument("ExperimentConfig: invalid detector noise");
    train.validate();
    protocol.access.validate();
    if (protocol.dwell_cycles < 1)
        throw std::invalid_argument("ExperimentConfig: protocol.dwell_cycles must be >= 1");
    if (eval.snr_db.empty())
        throw std::invalid_argument("ExperimentConfig: eval.snr_db must not be empty");
    for (double f : data_fractions)
        if (!(f > 0.0 && f <= 1.0))
            throw std::invalid_argument("ExperimentConfig: data fractions must lie in (0, 1]");
}

std::size_t ExperimentConfig::predicted_set_size() const
{
    if (protocol.set_size > 0)
        return protocol.set_size;
    const std::size_t q = static_cast<std::size_t>(array.rows * ue_codebook.oversample_el) *
                          static_cast<std::size_t>(array.cols * ue_codebook.oversample_az);
    return std::max<std::size_t>(1, (12 * q + 255) / 256);
}

ExperimentConfig default_experiment_config()
{
    ExperimentConfig c;
    const Vec3 mount = c.scene.ris_pose.position;
    CameraModel wide;
    wide.position = mount;
    wide.yaw_rad = 90.0 * kDeg;
    wide.pitch_rad = -30.0 * kDeg;
    wide.fov_deg = 110.0;
    CameraModel narrow = wide;
    narrow.yaw_rad = 30.0 * kDeg;
    narrow.fov_deg = 75.0;
    c.cameras = {{"cam5", wide}, {"cam4", narrow}};
    c.train.epochs = 300;
    return c;
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig &base)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ExperimentConfig c = base;
    try {
        check_keys(j,
                   {"seed", "num_scenes", "train_fraction", "out_dir", "scene", "array", "channel", "ue_codebook",
                    "bs_codebook", "cameras", "detector", "train", "protocol", "eval", "data_fractions"},
                   "config");
        read_opt(j, "seed", c.seed);
        read_opt(j, "num_scenes", c.num_scenes);
        read_opt(j, "train_fraction", c.train_fraction);
        if (j.contains("out_dir"))
            c.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("scene"))
            scene_apply(j.at("scene"), c.scene);
        if (j.contains("array")) {
            const json &a = j.at("array");
            check_keys(a, {"rows", "cols", "spacing"}, "array");
            read_opt(a, "rows", c.array.rows);
            read_opt(a, "cols", c.array.cols);
            read_opt(a, "spacing", c.array.spacing);
            c.array = ArrayGeometry(c.array.rows, c.array.cols, c.array.spacing);
        }
        if (j.contains("channel")) {
            const json &ch = j.at("channel");
            check_keys(ch,
                       {"subcarriers", "sample_period_s", "max_delay_taps", "pathloss", "pulse", "rolloff",
                        "wavelength_m", "reflection_amplitude"},
                       "channel");
            read_opt(ch, "subcarriers", c.wideband.subcarriers);
            read_opt(ch, "sample_period_s", c.wideband.sample_period_s);
            read_opt(ch, "max_delay_taps", c.wideband.max_delay_taps);
            read_opt(ch, "pathloss", c.wideband.pathloss);
            read_opt(ch, "rolloff", c.wideband.rolloff);
            read_opt(ch, "wavelength_m", c.wavelength_m);
            read_opt(ch, "reflection_amplitude", c.reflection_amplitude);
            if (ch.contains("pulse")) {
                const auto p = ch.at("pulse").get<std::string>();
                if (p == "sinc")
                    c.wideband.pulse = PulseShape::Sinc;
                else if (p == "raised_cosine")
                    c.wideband.pulse = PulseShape::RaisedCosine;
                else
                    throw std::invalid_argument("channel.pulse: expected 'sinc' or 'raised_cosine'");
            }
        }
        if (j.contains("ue_codebook"))
            codebook_spec_apply(j.at("ue_codebook"), c.ue_codebook, "ue_codebook");
        if (j.contains("bs_codebook"))
            codebook_spec_apply(j.at("bs_codebook"), c.bs_codebook, "bs_codebook");
        if (j.contains("cameras")) {
            c.cameras.clear();
            for (const json &cam : j.at("cameras"))
                c.cameras.push_back(camera_from(cam));
        }
        if (j.contains("detector")) {
            const json &d = j.at("detector");
            check_keys(d, {"jitter_px", "miss_prob", "false_alarm_rate"}, "detector");
            read_opt(d, "jitter_px", c.detector.jitter_px);
            read_opt(d, "miss_prob", c.detector.miss_prob);
            read_opt(d, "false_alarm_rate", c.detector.false_alarm_rate);
        }
        if (j.contains("train")) {
            const json &t = j.at("train");
            check_keys(t, {"learning_rate", "batch_size", "epochs", "momentum", "seed", "threshold", "hidden"},
                       "train");
            read_opt(t, "learning_rate", c.train.learning_rate);
            read_opt(t, "batch_size", c.train.batch_size);
            read_opt(t, "epochs", c.train.epochs);
            read_opt(t, "momentum", c.train.momentum);
            read_opt(t, "seed", c.train.seed);
            read_opt(t, "threshold", c.train.threshold);
            read_opt(t, "hidden", c.train.hidden);
        }
        if (j.contains("protocol")) {
            const json &p = j.at("protocol");
            check_keys(p,
                       {"ssb_period_ms", "prach_offset_ms", "msg_latency_ms", "detect_threshold_db", "ssb_miss_prob",
                        "dwell_cycles", "snr_db", "runs", "set_size"},
                       "protocol");
            read_opt(p, "ssb_period_ms", c.protocol.access.ssb_period_ms);
            read_opt(p, "prach_offset_ms", c.protocol.access.prach_offset_ms);
            read_opt(p, "msg_latency_ms", c.protocol.access.msg_latency_ms);
            read_opt(p, "detect_threshold_db", c.protocol.access.detect_threshold_db);
            read_opt(p, "ssb_miss_prob", c.protocol.access.ssb_miss_prob);
            read_opt(p, "dwell_cycles", c.protocol.dwell_cycles);
            read_opt(p, "snr_db", c.protocol.snr_db);
            read_opt(p, "runs", c.protocol.runs);
            read_opt(p, "set_size", c.protocol.set_size);
        }
        if (j.contains("eval")) {
            const json &e = j.at("eval");
            check_keys(e, {"snr_db", "rate_snr_db", "k_values"}, "eval");
            read_opt(e, "snr_db", c.eval.snr_db);
            read_opt(e, "rate_snr_db", c.eval.rate_snr_db);
            read_opt(e, "k_values", c.eval.k_values);
        }
        read_opt(j, "data_fractions", c.data_fractions);
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path &path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception &e) {
        throw PipelineError(e.what());
    }
    return parse_config(text);
}

std::string dump_config(const ExperimentConfig &config) { return config_json(config).dump(2) + "\n"; }

// ==================================================================== tables

ResultTable::ResultTable(std::vector<std::string> columns) : columns_(std::move(columns))
{
    if (columns_.empty())
        throw std::invalid_argument("ResultTable: no columns");
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].empty() || columns_[i].find_first_of(",\n\r\"") != std::string::npos)
            throw std::invalid_argument("ResultTable: invalid column name '" + columns_[i] + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (columns_[j] == columns_[i])
                throw std::invalid_argument("ResultTable: duplicate column '" + columns_[i] + "'");
    }
}

void ResultTable::add_row(std::vector<double> row)
{
    if (row.size() != columns_.size())
        throw std::invalid_argument("ResultTable: row has " + std::to_string(row.size()) + " values, expected " +
                                    std::to_string(columns_.size()));
    rows_.push_back(std::move(row));
}

std::vector<double> ResultTable::column(std::string_view name) const
{
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end())
        throw std::out_of_range("ResultTable: no column '" + std::string(name) + "'");
    const auto c = static_cast<std::size_t>(it - columns_.begin());
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto &r : rows_)
        out.push_back(r[c]);
    return out;
}

std::string ResultTable::to_csv() const
{
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i)
            out += ',';
        out += columns_[i];
    }
    out += '\n';
    for (const auto &r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i)
                out += ',';
            out += format_double(r[i]);
        }
        out += '\n';
    }
    return out;
}

ResultTable ResultTable::from_csv(std::string_view text)
{
    auto split = [](std::string_view line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.emplace_back(line.substr(start, comma - start));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        return cells;
    };
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos)
            nl = text.size();
        if (nl > start)
            lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    if (lines.empty())
        throw std::invalid_argument("ResultTable: missing header row");
    ResultTable t(split(lines.front()));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<double> row;
        for (const std::string &cell : split(lines[i]))
            row.push_back(parse_double(cell));
        t.add_row(std::move(row));
    }
    return t;
}

// ==================================================================== dataset

std::vector<std::size_t> CameraRecord::labeled_ues() const
{
    std::vector<std::size_t> out;
    for (int m : matched_ue)
        if (m >= 0)
            out.push_back(static_cast<std::size_t>(m));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

std::size_t split_point(std::span<const CameraRecord> records, std::size_t scene_end)
{
    return static_cast<std::size_t>(
        std::partition_point(records.begin(), records.end(),
                             [&](const CameraRecord &r) { return r.scene_index < scene_end; }) -
        records.begin());
}

} // namespace

std::span<const CameraRecord> Dataset::train_records(std::size_t camera) const
{
    std::span<const CameraRecord> all = records.at(camera);
    return all.first(split_point(all, train_scene_end));
}

std::span<const CameraRecord> Dataset::test_records(std::size_t camera) const
{
    std::span<const CameraRecord> all = records.at(camera);
    return all.subspan(split_point(all, train_scene_end));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index)
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ stream) ^ index);
}

SceneChannels build_channels(const ExperimentConfig &config, const SceneRecord &record)
{
    auto normalized = [&](const std::vector<PathCluster> &clusters) {
        FreqChannel h = freq_channel(clusters, config.array, config.wideband);
        const double p = h.mean_power();
        if (p > 0.0)
            h.scale(1.0 / std::sqrt(p));
        return h;
    };
    SceneChannels out;
    out.h_T = normalized(record.bs_clusters);
    for (const auto &cs : record.ue_clusters)
        out.h_R.push_back(normalized(cs));
    return out;
}

SceneRecord make_scene_record(const ExperimentConfig &config, std::size_t index)
{
    SceneRecord r;
    r.index = index;
    r.scene = generate_scene(config.scene, config.seed + index);

    GeometryLinkSpec link;
    link.rx_pose = r.scene.ris_pose;
    link.reflectors = r.scene.reflectors;
    link.blockers = r.scene.blockers;
    link.carrier_wavelength = config.wavelength_m;
    link.reflection_amplitude = config.reflection_amplitude;

    link.tx_pos = r.scene.bs_pos;
    r.bs_clusters = relative_delays(clusters_from_geometry(link, derive_seed(config.seed, kStreamBsChannel, index)));
    const std::uint64_t ue_base = derive_seed(config.seed, kStreamUeChannel, index);
    for (std::size_t u = 0; u < r.scene.ues.size(); ++u) {
        link.tx_pos = r.scene.ues[u].antenna();
        r.ue_clusters.push_back(relative_delays(clusters_from_geometry(link, derive_seed(ue_base, 0, u))));
    }
    return r;
}

std::string channel_to_json(const FreqChannel &h)
{
    json re = json::array();
    json im = json::array();
    for (const cplx &v : h.data()) {
        re.push_back(v.real());
        im.push_back(v.imag());
    }
    return json{{"subcarriers", h.subcarriers()}, {"elements", h.elements()}, {"re", re}, {"im", im}}.dump();
}

FreqChannel channel_from_json(std::string_view text)
{
    try {
        const json j = json::parse(text);
        const auto re = j.at("re").get<std::vector<double>>();
        const auto im = j.at("im").get<std::vector<double>>();
        if (re.size() != im.size())
            throw std::invalid_argument("channel_from_json: re/im lengths differ");
        std::vector<cplx> data(re.size());
        for (std::size_t i = 0; i < re.size(); ++i)
            data[i] = {re[i], im[i]};
        return FreqChannel(j.at("subcarriers").get<int>(), j.at("elements").get<int>(), std::move(data));
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("channel_from_json: ") + e.what());
    }
}

fs::path cmd_generate(const ExperimentConfig &config, const fs::path &out_dir)
{
    config.validate();
    ensure_dir(out_dir);

    const PhaseCodebook P = make_bs_codebook(config);
    const PhaseCodebook Q = make_ue_codebook(config);
    const ReferenceVector ref = ReferenceVector::ones(Q.elements());
    const int num_classes = static_cast<int>(config.scene.classes.size());

    std::string scenes_text;
    std::vector<std::string> record_text(config.cameras.size());
    std::vector<std::size_t> train_counts(config.cameras.size(), 0);
    std::vector<std::size_t> total_counts(config.cameras.size(), 0);
    const auto train_end =
        static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(config.num_scenes)));

    for (std::size_t i = 0; i < config.num_scenes; ++i) {
        const SceneRecord rec = make_scene_record(config, i);
        scenes_text += scene_record_json(rec).dump() + '\n';
        const SceneChannels ch = build_channels(config, rec);

        for (std::size_t c = 0; c < config.cameras.size(); ++c) {
            const CameraModel &cam = config.cameras[c].model;
            CameraRecord r;
            r.scene_index = i;
            r.detections =
                project_detect(rec.scene, cam, config.detector, derive_seed(config.seed, kStreamDetector + c, i),
                               num_classes);
            r.matched_ue = match_detections(rec.scene, cam, r.detections);
            const std::vector<std::size_t> labeled = r.labeled_ues();
            if (labeled.empty())
                continue;
            r.V = encode_ue_info(r.detections, cam, num_classes, config.scene.u_max);
            std::vector<FreqChannel> hs;
            for (std::size_t u : labeled)
                hs.push_back(ch.h_R[u]);
            r.target = optimal_beam_set(hs, Q, ref);
            record_text[c] += record_json(r).dump() + '\n';
            ++total_counts[c];
            if (i < train_end)
                ++train_counts[c];
        }
    }

    std::map<std::string, std::string> files;
    auto emit = [&](const std::string &name, const std::string &text) {
        write_out(out_dir / name, text);
        files[name] = sha256_hex(text);
    };
    emit("config.json", dump_config(config));
    emit("scenes.jsonl", scenes_text);
    emit("codebook_P.txt", codebook_text(P));
    emit("codebook_Q.txt", codebook_text(Q));
    json records = json::object();
    std::vector<std::string> names;
    for (std::size_t c = 0; c < config.cameras.size(); ++c) {
        emit(records_file(config.cameras[c].name), record_text[c]);
        names.push_back(config.cameras[c].name);
        records[config.cameras[c].name] = {{"train", train_counts[c]}, {"test", total_counts[c] - train_counts[c]}};
    }

    const json manifest = {
        {"format", kDatasetFormat},
        {"seed", config.seed},
        {"scene_seeds", "seed + scene index"},
        {"num_scenes", config.num_scenes},
        {"train_fraction", config.train_fraction},
        {"split",
         {{"train_scenes", json::array({0, train_end})},
          {"test_scenes", json::array({train_end, config.num_scenes})},
          {"records", records}}},
        {"cameras", names},
        {"codebook_hash", {{"P", codebook_hash(P)}, {"Q", codebook_hash(Q)}}},
        {"codebook_size", {{"P", P.size()}, {"Q", Q.size()}}},
        {"files", files},
    };
    const fs::path manifest_path = out_dir / "manifest.json";
    write_out(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

Dataset load_dataset(const fs::path &dir, const ExperimentConfig *expected)
{
    const fs::path manifest_path = dir / "manifest.json";
    const json manifest = read_json_file(manifest_path);
    if (manifest.value("format", std::string{}) != kDatasetFormat)
        throw PipelineError(manifest_path.string() + ": not a rissim dataset manifest");

    try {
        for (const auto &[name, hash] : manifest.at("files").items()) {
            const fs::path p = dir / name;
            if (!fs::exists(p))
                throw PipelineError("manifest references missing file " + p.string());
            if (sha256_file(p) != hash.get<std::string>())
                throw PipelineError("hash mismatch for " + p.string());
        }

        Dataset d;
        d.manifest_hash = sha256_file(manifest_path);
        d.config = load_config(dir / "config.json");
        {
            std::istringstream ps(read_file(dir / "codebook_P.txt"));
            d.P = read_codebook(ps);
            std::istringstream qs(read_file(dir / "codebook_Q.txt"));
            d.Q = read_codebook(qs);
        }
        const json &hashes = manifest.at("codebook_hash");
        if (codebook_hash(d.P) != hashes.at("P").get<std::string>() ||
            codebook_hash(d.Q) != hashes.at("Q").get<std::string>())
            throw PipelineError("codebook hash mismatch between manifest and codebook files in " + dir.string());
        if (expected) {
            if (codebook_hash(make_bs_codebook(*expected)) != hashes.at("P").get<std::string>() ||
                codebook_hash(make_ue_codebook(*expected)) != hashes.at("Q").get<std::string>())
                throw PipelineError("codebook hash mismatch: the configured codebooks differ from the dataset's");
        }

        d.train_scene_end = manifest.at("split").at("train_scenes").at(1).get<std::size_t>();
        for (const json &j : read_jsonl_file(dir / "scenes.jsonl"))
            d.scenes.push_back(scene_record_from(j, d.config));
        for (std::size_t i = 0; i < d.scenes.size(); ++i)
            if (d.scenes[i].index != i)
                throw PipelineError("scenes.jsonl: scenes out of order at line " + std::to_string(i + 1));

        const int num_classes = static_cast<int>(d.config.scene.classes.size());
        for (const CameraSpec &cam : d.config.cameras) {
            std::vector<CameraRecord> recs;
            for (const json &j : read_jsonl_file(dir / records_file(cam.name))) {
                recs.push_back(record_from(j, num_classes, d.config.scene.u_max));
                if (recs.back().scene_index >= d.scenes.size())
                    throw PipelineError(records_file(cam.name) + ": record refers to a missing scene");
                recs.back().target.validate(d.Q.size());
            }
            d.records.push_back(std::move(recs));
        }
        return d;
    } catch (const json::exception &e) {
        throw PipelineError(manifest_path.string() + ": " + e.what());
    }
}

// ==================================================================== training

TrainedModels cmd_train(const ExperimentConfig &config, const fs::path &data_dir, const fs::path &out_dir)
{
    config.validate();
    const Dataset data = load_dataset(data_dir, &config);
    check_cameras(config, data);
    ensure_dir(out_dir);

    TrainedModels models;
    json files = json::object();
    for (std::size_t c = 0; c < data.config.cameras.size(); ++c) {
        const std::string &name = data.config.cameras[c].name;
        const auto train_set = to_samples(data.train_records(c), data.Q.size());
        const auto test_set = to_samples(data.test_records(c), data.Q.size());
        if (train_set.empty())
            throw PipelineError("camera '" + name + "' has no training records");
        TrainResult res = train(train_set, test_set, config.train);

        std::ostringstream os;
        write_params(os, res.params);
        const std::string model_name = "model_" + name + ".txt";
        write_out(out_dir / model_name, os.str());
        files[model_name] = sha256_hex(os.str());

        ResultTable curve({"epoch", "train_bits", "test_bits"});
        for (const EpochRecord &e : res.curve)
            curve.add_row({static_cast<double>(e.epoch), e.train_loss, e.test_loss});
        write_out(out_dir / ("curve_" + name + ".csv"), curve.to_csv());
        models.per_camera.push_back(std::move(res.params));
    }
    const json index = {{"format", kModelsFormat}, {"dataset_manifest", data.manifest_hash}, {"files", files}};
    write_out(out_dir / "models.json", index.dump(2) + "\n");
    return models;
}

TrainedModels load_models(const fs::path &model_dir, const Dataset &data)
{
    const json index = read_json_file(model_dir / "models.json");
    if (index.value("format", std::string{}) != kModelsFormat)
        throw PipelineError((model_dir / "models.json").string() + ": not a rissim model index");
    if (index.value("dataset_manifest", std::string{}) != data.manifest_hash)
        throw PipelineError("models in " + model_dir.string() + " were trained on a different dataset");
    TrainedModels out;
    for (const CameraSpec &cam : data.config.cameras) {
        const std::string name = "model_" + cam.name + ".txt";
        const fs::path p = model_dir / name;
        const std::string text = read_file(p);
        if (!index.at("files").contains(name) || sha256_hex(text) != index.at("files").at(name).get<std::string>())
            throw PipelineError("hash mismatch for " + p.string());
        std::istringstream is(text);
        NetParams params = read_params(is);
        if (params.output_dim() != static_cast<int>(data.Q.size()))
            throw PipelineError(p.string() + ": output width does not match the codebook size");
        out.per_camera.push_back(std::move(params));
    }
    return out;
}

// ==================================================================== evaluation

std::vector<EvalTables> cmd_eval(const ExperimentConfig &config, const fs::path &data_dir, const fs::path &model_dir,
                                 const fs::path &out_dir, const EvalOptions &options)
{
    config.validate();
    const Dataset data = load_dataset(data_dir, &config);
    check_cameras(config, data);
    TrainedModels models;
    if (!options.oracle_predictor)
        models = load_models(model_dir, data);
    ensure_dir(out_dir);

    const std::size_t nq = data.Q.size();
    const ReferenceVector ref = ReferenceVector::ones(data.P.elements());
    std::vector<std::size_t> ks = config.eval.k_values;
    if (ks.empty())
        for (std::size_t k = 1; k <= nq; ++k)
            ks.push_back(k);
    for (std::size_t k : ks)
        if (k < 1 || k > nq)
            throw std::invalid_argument("eval: k = " + std::to_string(k) + " outside [1, |Q|]");
    std::vector<double> snrs = config.eval.snr_db;
    const double k_snr = db_to_linear(config.eval.rate_snr_db);

    ChannelCache cache(data);
    std::vector<EvalTables> out;
    for (std::size_t c = 0; c < data.config.cameras.size(); ++c) {
        const std::string &name = data.config.cameras[c].name;
        const auto records = data.test_records(c);
        if (records.empty())
            throw PipelineError("camera '" + name + "' has an empty test split");
        const NetParams *params = options.oracle_predictor ? nullptr : &models.per_camera[c];

        EvalTables t{ResultTable({"threshold", "accuracy", "recall", "records"}),
                     ResultTable({"snr_db", "equal_gain", "exhaustive", "predicted"}),
                     ResultTable({"k", "rate_ratio", "predicted_rate", "exhaustive_rate"}),
                     ResultTable({"records", "pairs", "beams_checked", "violations"})};

        std::vector<BeamSet> preds;
        std::vector<BeamSet> truths;
        std::vector<double> eg_sum(snrs.size(), 0.0);
        std::vector<double> ex_sum(snrs.size(), 0.0);
        std::vector<double> pr_sum(snrs.size(), 0.0);
        std::vector<double> k_pred(ks.size(), 0.0);
        double k_exh = 0.0;
        std::size_t pairs = 0;
        std::size_t checked = 0;
        std::size_t violations = 0;

        for (const CameraRecord &r : records) {
            const ScoreVector scores = record_scores(params, r, nq);
            BeamSet pred = predict_set(scores, PredictMode::threshold_at(config.train.threshold));
            preds.push_back(pred);
            truths.push_back(r.target);
            const std::vector<std::size_t> ranked = rank_beams(scores);
            if (pred.empty())
                pred = BeamSet({ranked.front()});

            const SceneChannels &ch = cache.get(r.scene_index);
            const ReflectBeam &p_star = data.P[decoupled_bs_beam(ch.h_T, data.P, ref)];
            for (std::size_t u : r.labeled_ues()) {
                const FreqChannel composite = composite_channel(ch.h_T, ch.h_R[u]);
                std::vector<std::vector<double>> gains(nq);
                for (std::size_t q = 0; q < nq; ++q)
                    gains[q] = subcarrier_gains(composite, p_star * data.Q[q]);

                for (std::size_t s = 0; s < snrs.size(); ++s) {
                    const double snr = db_to_linear(snrs[s]);
                    const double eg = equal_gain_rate(composite, snr);
                    double best = 0.0;
                    double best_pred = 0.0;
                    for (std::size_t q = 0; q < nq; ++q) {
                        const double rate = rate_from_gains(gains[q], snr);
                        best = std::max(best, rate);
                        if (pred.contains(q))
                            best_pred = std::max(best_pred, rate);
                        ++checked;
                        if (rate > eg * (1.0 + 1e-12) + 1e-15)
                            ++violations;
                    }
                    eg_sum[s] += eg;
                    ex_sum[s] += best;
                    pr_sum[s] += best_pred;
                }

                std::vector<double> rates(nq);
                for (std::size_t q = 0; q < nq; ++q)
                    rates[q] = rate_from_gains(gains[q], k_snr);
                k_exh += *std::max_element(rates.begin(), rates.end());
                for (std::size_t i = 0; i < ks.size(); ++i) {
                    double best = 0.0;
                    for (std::size_t j = 0; j < ks[i]; ++j)
                        best = std::max(best, rates[ranked[j]]);
                    k_pred[i] += best;
                }
                ++pairs;
            }
        }

        const SetMetrics m = eval_metrics(preds, truths);
        t.metrics.add_row({config.train.threshold, m.accuracy, m.recall, static_cast<double>(records.size())});
        const double n = static_cast<double>(std::max<std::size_t>(pairs, 1));
        for (std::size_t s = 0; s < snrs.size(); ++s)
            t.rate_snr.add_row({snrs[s], eg_sum[s] / n, ex_sum[s] / n, pr_sum[s] / n});
        for (std::size_t i = 0; i < ks.size(); ++i)
            t.rate_k.add_row({static_cast<double>(ks[i]), k_exh > 0.0 ? k_pred[i] / k_exh : 1.0, k_pred[i] / n,
                              k_exh / n});
        t.bound.add_row({static_cast<double>(records.size()), static_cast<double>(pairs), static_cast<double>(checked),
                         static_cast<double>(violations)});

        write_out(out_dir / ("metrics_" + name + ".csv"), t.metrics.to_csv());
        write_out(out_dir / ("rate_snr_" + name + ".csv"), t.rate_snr.to_csv());
        write_out(out_dir / ("rate_k_" + name + ".csv"), t.rate_k.to_csv());
        write_out(out_dir / ("bound_" + name + ".csv"), t.bound.to_csv());
        out.push_back(std::move(t));
    }
    return out;
}

// ==================================================================== protocol

std::vector<ProtocolTables> cmd_protocol(const ExperimentConfig &config, const fs::path &data_dir,
                                         const fs::path &model_dir, const fs::path &out_dir)
{
    config.validate();
    const Dataset data = load_dataset(data_dir, &config);
    check_cameras(config, data);
    const TrainedModels models = load_models(model_dir, data);
    ensure_dir(out_dir / "traces");

    const std::size_t nq = data.Q.size();
    const std::size_t B = std::min(config.predicted_set_size(), nq);
    const ReferenceVector ref = ReferenceVector::ones(data.P.elements());
    const int K = data.config.wideband.subcarriers;
    const double snr = db_to_linear(config.protocol.snr_db);
    const LinkBudget budget{snr * K, 1.0};
    const int dwell = config.protocol.dwell_cycles;

    ChannelCache cache(data);
    std::vector<ProtocolTables> out;
    for (std::size_t c = 0; c < data.config.cameras.size(); ++c) {
        const std::string &name = data.config.cameras[c].name;
        ProtocolTables t{ResultTable({"run", "policy", "success", "beam", "beams_tried", "t_access_ms",
                                      "training_time_ms", "causal", "ris_messages"}),
                         ResultTable({"policy", "runs", "successes", "failures", "mean_beams_tried",
                                      "mean_t_access_ms", "mean_training_time_ms", "reduction_factor", "set_size"})};
        std::vector<std::vector<AccessOutcome>> outcomes(3);

        std::size_t run = 0;
        for (const CameraRecord &r : data.test_records(c)) {
            if (run >= config.protocol.runs)
                break;
            const std::vector<std::size_t> ranked = rank_beams(forward(models.per_camera[c], r.V));
            const std::vector<std::size_t> top(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(B));
            const SceneChannels &ch = cache.get(r.scene_index);
            const std::size_t p_star = decoupled_bs_beam(ch.h_T, data.P, ref);

            for (std::size_t u : r.labeled_ues()) {
                if (run >= config.protocol.runs)
                    break;
                const FreqChannel composite = composite_channel(ch.h_T, ch.h_R[u]);
                std::size_t q_best = 0;
                double best = -1.0;
                for (std::size_t q = 0; q < nq; ++q) {
                    const double rate = achievable_rate(composite, data.P[p_star] * data.Q[q], snr);
                    if (rate > best) {
                        best = rate;
                        q_best = q;
                    }
                }

                const std::uint64_t seed = derive_seed(config.seed, kStreamProtocol, run);
                const std::pair<double, SweepPolicy> policies[] = {
                    {kPolicyExhaustive, SweepPolicy::exhaustive(nq, dwell)},
                    {kPolicyPredicted, SweepPolicy::predicted(top, dwell)},
                    {kPolicyOracle, SweepPolicy::oracle(q_best, dwell)},
                };
                for (const auto &[code, policy] : policies) {
                    AccessLink link{ch.h_T, ch.h_R[u], data.P, data.Q, budget};
                    const AccessResult res = run_initial_access(std::move(link), policy, config.protocol.access, seed);
                    const AccessOutcome &o = res.outcome;
                    outcomes[static_cast<std::size_t>(code)].push_back(o);
                    t.runs.add_row({static_cast<double>(run), code, o.success ? 1.0 : 0.0, static_cast<double>(o.beam),
                                    static_cast<double>(o.beams_tried), o.t_access_ms, o.training_time_ms,
                                    check_causality(res.trace) ? 1.0 : 0.0,
                                    static_cast<double>(ris_message_count(res.trace))});
                    static const char *const tags[] = {"exhaustive", "predicted", "oracle"};
                    std::ostringstream os;
                    write_trace(os, res.trace);
                    write_out(out_dir / "traces" /
                                  (name + "_" + tags[static_cast<std::size_t>(code)] + "_" + std::to_string(run) +
                                   ".jsonl"),
                              os.str());
                }
                ++run;
            }
        }
        if (run == 0)
            throw PipelineError("camera '" + name + "' has no test records to simulate");

        for (std::size_t p = 0; p < outcomes.size(); ++p) {
            const OverheadSummary s = overhead_report(outcomes[p], nq);
            const double set_size = p == 0 ? static_cast<double>(nq) : p == 1 ? static_cast<double>(B) : 1.0;
            t.summary.add_row({static_cast<double>(p), static_cast<double>(s.runs), static_cast<double>(s.successes),
                               static_cast<double>(s.failures), s.mean_beams_tried, s.mean_t_access_ms,
                               s.mean_training_time_ms, s.reduction_factor, set_size});
        }
        write_out(out_dir / ("protocol_" + name + ".csv"), t.runs.to_csv());
        write_out(out_dir / ("protocol_summary_" + name + ".csv"), t.summary.to_csv());
        out.push_back(std::move(t));
    }
    return out;
}

// ==================================================================== data size study

std::vector<ResultTable> cmd_datafrac(const ExperimentConfig &config, const fs::path &data_dir,
                                      const fs::path &out_dir)
{
    config.validate();
    if (config.data_fractions.empty())
        throw std::invalid_argument("datafrac: no fractions given");
    const Dataset data = load_dataset(data_dir, &config);
    check_cameras(config, data);
    ensure_dir(out_dir);

    std::vector<ResultTable> out;
    for (std::size_t c = 0; c < data.config.cameras.size(); ++c) {
        const auto train_recs = data.train_records(c);
        const auto test_recs = data.test_records(c);
        if (train_recs.empty() || test_recs.empty())
            throw PipelineError("camera '" + data.config.cameras[c].name + "' needs both splits for datafrac");
        const auto all_train = to_samples(train_recs, data.Q.size());

        ResultTable t({"fraction", "train_records", "accuracy", "recall"});
        for (double f : config.data_fractions) {
            const auto n = std::clamp<std::size_t>(
                static_cast<std::size_t>(std::ceil(f * static_cast<double>(all_train.size()))), 1, all_train.size());
            const std::span<const TrainingSample> subset(all_train.data(), n);
            const TrainResult res = train(subset, {}, config.train);
            const SetMetrics m = threshold_metrics(res.params, test_recs, config.train.threshold);
            t.add_row({f, static_cast<double>(n), m.accuracy, m.recall});
        }
        write_out(out_dir / ("datafrac_" + data.config.cameras[c].name + ".csv"), t.to_csv());
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace rissim
