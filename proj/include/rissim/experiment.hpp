// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// End-to-end experiment pipeline: dataset generation, per-camera training,
// evaluation tables, protocol overhead runs and the data-size study.
//
// Every stage reads and writes plain files under a directory:
//
//   generate  -> config.json, manifest.json, scenes.jsonl,
//                records_<camera>.jsonl, codebook_P.txt, codebook_Q.txt
//   train     -> model_<camera>.txt, curve_<camera>.csv, models.json
//   eval      -> metrics_<camera>.csv, rate_snr_<camera>.csv,
//                rate_k_<camera>.csv, bound_<camera>.csv
//   protocol  -> protocol_<camera>.csv, protocol_summary_<camera>.csv,
//                traces/<camera>_<policy>_<run>.jsonl
//   datafrac  -> datafrac_<camera>.csv

#pragma once

#include "rissim/access.hpp"
#include "rissim/beams.hpp"
#include "rissim/beamset_net.hpp"
#include "rissim/channel.hpp"
#include "rissim/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rissim {

struct CameraSpec {
    std::string name;
    CameraModel model;
};

struct ProtocolSettings {
    AccessConfig access;
    int dwell_cycles = 2;
    double snr_db = -30.0;    ///< p_t / (K sigma^2) on normalized channels
    std::size_t runs = 100;   ///< test (record, UE) pairs simulated per camera
    std::size_t set_size = 0; ///< predicted-set size B; 0 picks ceil(12 |Q| / 256)
};

struct EvalSettings {
    std::vector<double> snr_db{-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
    double rate_snr_db = 0.0;       ///< operating point of the rate-vs-k table
    std::vector<std::size_t> k_values; ///< empty means 1..|Q|
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t num_scenes = 2000;
    double train_fraction = 0.8;
    std::filesystem::path out_dir = "rissim_out";

    SceneConfig scene;
    ArrayGeometry array{8, 8, 0.5};
    WidebandParams wideband;
    double wavelength_m = 0.0107;
    double reflection_amplitude = 0.3;
    DftCodebookSpec ue_codebook;
    DftCodebookSpec bs_codebook;
    std::vector<CameraSpec> cameras;
    DetectorNoise detector;
    TrainConfig train;
    ProtocolSettings protocol;
    EvalSettings eval;
    std::vector<double> data_fractions{0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0};

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;
    std::size_t predicted_set_size() const;
};

/// Desk-scale defaults with the two cameras "cam5" (110 deg) and "cam4" (75 deg).
ExperimentConfig default_experiment_config();

/// Applies the JSON object in `text` on top of `base`. Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig &base = default_experiment_config());
ExperimentConfig load_config(const std::filesystem::path &path);
/// Full JSON form of the configuration; parsing it back reproduces the same dump.
std::string dump_config(const ExperimentConfig &config);

/// Rectangular numeric table with unique column names, written as CSV.
class ResultTable {
public:
    ResultTable() = default;
    explicit ResultTable(std::vector<std::string> columns);

    const std::vector<std::string> &columns() const { return columns_; }
    const std::vector<std::vector<double>> &rows() const { return rows_; }
    std::size_t num_rows() const { return rows_.size(); }

    void add_row(std::vector<double> row);
    std::vector<double> column(std::string_view name) const;

    std::string to_csv() const;
    static ResultTable from_csv(std::string_view text);

    friend bool operator==(const ResultTable &, const ResultTable &) = default;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

/// IO failure, bad manifest, or hash mismatch.
struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SceneRecord {
    std::size_t index = 0;
    Scene scene;
    std::vector<PathCluster> bs_clusters;
    std::vector<std::vector<PathCluster>> ue_clusters; ///< one list per scene UE
};

struct CameraRecord {
    std::size_t scene_index = 0;
    std::vector<DetectedUE> detections;
    std::vector<int> matched_ue; ///< scene UE per detection, -1 for clutter
    UEInfoMatrix V{3, 8};
    BeamSet target;

    /// Distinct scene UEs that some detection matched, ascending.
    std::vector<std::size_t> labeled_ues() const;
};

struct Dataset {
    ExperimentConfig config;
    std::string manifest_hash;
    std::vector<SceneRecord> scenes;
    std::vector<std::vector<CameraRecord>> records; ///< per camera, by scene index
    std::size_t train_scene_end = 0;                ///< scenes [0, end) form the training split
    PhaseCodebook P;
    PhaseCodebook Q;

    std::span<const CameraRecord> train_records(std::size_t camera) const;
    std::span<const CameraRecord> test_records(std::size_t camera) const;
};

/// Seed of an independent stream keyed by (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Frequency-domain channels of one scene, each normalized to unit mean
/// per-element power.
struct SceneChannels {
    FreqChannel h_T;
    std::vector<FreqChannel> h_R;
};

SceneChannels build_channels(const ExperimentConfig &config, const SceneRecord &record);
SceneRecord make_scene_record(const ExperimentConfig &config, std::size_t index);

std::string channel_to_json(const FreqChannel &h);
FreqChannel channel_from_json(std::string_view text);

/// Writes the dataset and returns its manifest path.
std::filesystem::path cmd_generate(const ExperimentConfig &config, const std::filesystem::path &out_dir);

/// Reads and hash-checks a dataset. When `expected` is given its codebooks
/// must hash to the manifest's values.
Dataset load_dataset(const std::filesystem::path &dir, const ExperimentConfig *expected = nullptr);

struct TrainedModels {
    std::vector<NetParams> per_camera;
};

TrainedModels cmd_train(const ExperimentConfig &config, const std::filesystem::path &data_dir,
                        const std::filesystem::path &out_dir);
TrainedModels load_models(const std::filesystem::path &model_dir, const Dataset &data);

struct EvalTables {
    ResultTable metrics;  ///< threshold, accuracy, recall, records
    ResultTable rate_snr; ///< snr_db, equal_gain, exhaustive, predicted
    ResultTable rate_k;   ///< k, rate_ratio, predicted_rate, exhaustive_rate
    ResultTable bound;    ///< records, pairs, beams_checked, violations
};

struct EvalOptions {
    bool oracle_predictor = false; ///< scores taken from the true targets
};

std::vector<EvalTables> cmd_eval(const ExperimentConfig &config, const std::filesystem::path &data_dir,
                                 const std::filesystem::path &model_dir, const std::filesystem::path &out_dir,
                                 const EvalOptions &options = {});

struct ProtocolTables {
    ResultTable runs;    ///< run, policy, success, beam, beams_tried, t_access_ms, training_time_ms, causal, ris_messages
    ResultTable summary; ///< policy, runs, successes, failures, mean_beams_tried, mean_t_access_ms, mean_training_time_ms, reduction_factor, set_size
};

/// Policy codes used in the protocol tables.
inline constexpr double kPolicyExhaustive = 0.0;
inline constexpr double kPolicyPredicted = 1.0;
inline constexpr double kPolicyOracle = 2.0;

std::vector<ProtocolTables> cmd_protocol(const ExperimentConfig &config, const std::filesystem::path &data_dir,
                                         const std::filesystem::path &model_dir,
                                         const std::filesystem::path &out_dir);

std::vector<ResultTable> cmd_datafrac(const ExperimentConfig &config, const std::filesystem::path &data_dir,
                                      const std::filesystem::path &out_dir);

} // namespace rissim
