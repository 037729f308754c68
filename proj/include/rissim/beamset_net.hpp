// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// Permutation-invariant beam-set predictor.
//
// Every detected UE column v_u passes through the same fully connected stack
// (ReLU between layers, linear last layer of width |Q|); the per-UE outputs
// are summed and squashed by a sigmoid into one score per codebook beam:
//
//     t = sigmoid( sum_u MLP(v_u) )
//
// All-zero (padding) columns are skipped, so the output does not depend on
// how many padding columns follow the detections. Columns are accumulated in
// lexicographic order, which makes the output bit-identical under any
// permutation of the detections.

#pragma once

#include "rissim/beams.hpp"
#include "rissim/scene.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace rissim {

inline constexpr double kScoreClamp = 1e-7;

struct DenseLayer {
    Eigen::MatrixXd weights; ///< out x in
    Eigen::VectorXd bias;
};

struct NetParams {
    int input_dim = 0;
    std::vector<DenseLayer> layers;
    std::uint64_t seed = 0;

    /// Widths of the layers in order; the last one is |Q|.
    std::vector<int> layer_dims() const;
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().bias.size()); }
    /// Throws unless dimensions chain and every entry is finite.
    void validate() const;
};

/// He-uniform weights and zero biases, deterministic under `seed`.
NetParams init_params(int input_dim, std::span<const int> layer_dims, std::uint64_t seed);

void write_params(std::ostream &os, const NetParams &params);
NetParams read_params(std::istream &is);

struct MultiHotTarget {
    std::vector<double> bits;

    static MultiHotTarget from_set(const BeamSet &set, std::size_t codebook_size);
    BeamSet to_set() const;
};

struct ScoreVector {
    std::vector<double> scores;
};

struct TrainingSample {
    UEInfoMatrix V;
    MultiHotTarget target;
};

ScoreVector forward(const NetParams &params, const UEInfoMatrix &V);

/// Two-sided binary cross-entropy summed over samples and beams, in bits.
double loss(const NetParams &params, std::span<const TrainingSample> batch);

/// Gradient of loss() with respect to every weight and bias.
std::vector<DenseLayer> grad(const NetParams &params, std::span<const TrainingSample> batch);

struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 32;
    int epochs = 100;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    double threshold = 0.5;
    std::vector<int> hidden{64, 64};

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0; ///< bits per beam per sample
    double test_loss = 0.0;  ///< bits per beam per sample; NaN when no test set
};

struct TrainResult {
    NetParams params;
    std::vector<EpochRecord> curve;
};

/// Mean loss in bits per beam per sample.
double mean_loss_per_beam(const NetParams &params, std::span<const TrainingSample> samples);

/// Mini-batch SGD with momentum on the mean batch gradient. Initial weights
/// come from config.seed unless `initial` is given.
TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> test_set,
                  const TrainConfig &config, const NetParams *initial = nullptr);

struct PredictMode {
    enum class Kind { Threshold, TopK };
    Kind kind = Kind::Threshold;
    double threshold = 0.5;
    std::size_t k = 1;

    static PredictMode threshold_at(double delta) { return {Kind::Threshold, delta, 0}; }
    static PredictMode top_k(std::size_t k) { return {Kind::TopK, 0.5, k}; }
};

BeamSet predict_set(const ScoreVector &scores, const PredictMode &mode);
BeamSet predict_set(const NetParams &params, const UEInfoMatrix &V, const PredictMode &mode);

/// Indices sorted by descending score, ties to the smaller index.
std::vector<std::size_t> rank_beams(const ScoreVector &scores);

struct SetMetrics {
    double accuracy = 0.0;
    double recall = 0.0;
};

/// Per-sample |truth & pred| / |pred| and |truth & pred| / |truth|, averaged.
/// An empty prediction scores accuracy 1 only when the truth is empty too;
/// an empty truth always scores recall 1.
SetMetrics eval_metrics(std::span<const BeamSet> predictions, std::span<const BeamSet> truths);

} // namespace rissim
