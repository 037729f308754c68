// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/beamset_net.hpp"
#include "rissim/textio.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace rissim {

namespace {

const double kInvLn2 = 1.0 / std::numbers::ln2;

// Non-padding columns of V, sorted lexicographically, one per matrix column.
Eigen::MatrixXd canonical_columns(const UEInfoMatrix &V)
{
    std::vector<std::span<const double>> cols;
    for (int u = 0; u < V.u_max(); ++u) {
        auto c = V.column(u);
        if (std::any_of(c.begin(), c.end(), [](double x) { return x != 0.0; }))
            cols.push_back(c);
    }
    std::sort(cols.begin(), cols.end(), [](std::span<const double> a, std::span<const double> b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    });
    Eigen::MatrixXd X(V.feature_dim(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (int i = 0; i < V.feature_dim(); ++i)
            X(i, static_cast<Eigen::Index>(j)) = cols[j][static_cast<std::size_t>(i)];
    return X;
}

struct ForwardPass {
    std::vector<Eigen::MatrixXd> activations; ///< [0] is the input, one per layer after it
    Eigen::VectorXd logits;                  ///< summed over columns
};

ForwardPass run_layers(const NetParams &params, const UEInfoMatrix &V)
{
    if (V.feature_dim() != params.input_dim)
        throw std::invalid_argument("forward: UE feature width " + std::to_string(V.feature_dim()) +
                                    " does not match network input " + std::to_string(params.input_dim));
    ForwardPass fp;
    fp.activations.push_back(canonical_columns(V));
    const std::size_t L = params.layers.size();
    for (std::size_t l = 0; l < L; ++l) {
        const DenseLayer &layer = params.layers[l];
        Eigen::MatrixXd z = layer.weights * fp.activations.back();
        z.colwise() += layer.bias;
        if (l + 1 < L)
            z = z.cwiseMax(0.0);
        fp.activations.push_back(std::move(z));
    }
    const Eigen::MatrixXd &out = fp.activations.back();
    fp.logits = Eigen::VectorXd::Zero(params.output_dim());
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        fp.logits += out.col(j);
    return fp;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_score(double s) { return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp); }

double sample_loss_bits(const Eigen::VectorXd &logits, const MultiHotTarget &t)
{
    double acc = 0.0;
    for (Eigen::Index j = 0; j < logits.size(); ++j) {
        const double s = clamp_score(sigmoid(logits(j)));
        const double y = t.bits[static_cast<std::size_t>(j)];
        acc -= y * std::log(s) + (1.0 - y) * std::log(1.0 - s);
    }
    return acc * kInvLn2;
}

void check_target(const NetParams &params, const MultiHotTarget &t)
{
    if (t.bits.size() != static_cast<std::size_t>(params.output_dim()))
        throw std::invalid_argument("target length does not match network output");
}

std::vector<DenseLayer> zeros_like(const NetParams &params)
{
    std::vector<DenseLayer> g;
    for (const DenseLayer &l : params.layers)
        g.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    return g;
}

void accumulate_grad(const NetParams &params, const TrainingSample &sample, std::vector<DenseLayer> &g)
{
    check_target(params, sample.target);
    const ForwardPass fp = run_layers(params, sample.V);
    const Eigen::Index n_cols = fp.activations.front().cols();
    if (n_cols == 0)
        return; // constant output, no parameter dependence

    Eigen::VectorXd dlogits(params.output_dim());
    for (Eigen::Index j = 0; j < dlogits.size(); ++j) {
        const double s = sigmoid(fp.logits(j));
        const bool clamped = s < kScoreClamp || s > 1.0 - kScoreClamp;
        dlogits(j) = clamped ? 0.0 : (s - sample.target.bits[static_cast<std::size_t>(j)]) * kInvLn2;
    }

    // The summed logits feed back equally into every column.
    Eigen::MatrixXd delta = dlogits.replicate(1, n_cols);
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const Eigen::MatrixXd &input = fp.activations[l];
        g[l].weights.noalias() += delta * input.transpose();
        g[l].bias += delta.rowwise().sum();
        if (l == 0)
            break;
        Eigen::MatrixXd back = params.layers[l].weights.transpose() * delta;
        delta = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    }
}

} // namespace

std::vector<int> NetParams::layer_dims() const
{
    std::vector<int> dims;
    for (const DenseLayer &l : layers)
        dims.push_back(static_cast<int>(l.bias.size()));
    return dims;
}

void NetParams::validate() const
{
    if (input_dim < 1 || layers.empty())
        throw std::invalid_argument("NetParams: need a positive input width and at least one layer");
    Eigen::Index in = input_dim;
    for (const DenseLayer &l : layers) {
        if (l.weights.cols() != in || l.weights.rows() != l.bias.size())
            throw std::invalid_argument("NetParams: layer dimensions do not chain");
        if (!l.weights.allFinite() || !l.bias.allFinite())
            throw std::invalid_argument("NetParams: non-finite parameter");
        in = l.weights.rows();
    }
}

NetParams init_params(int input_dim, std::span<const int> layer_dims, std::uint64_t seed)
{
    if (input_dim < 1 || layer_dims.empty())
        throw std::invalid_argument("init_params: bad dimensions");
    NetParams p;
    p.input_dim = input_dim;
    p.seed = seed;
    std::mt19937_64 rng(seed);
    int in = input_dim;
    for (int out : layer_dims) {
        if (out < 1)
            throw std::invalid_argument("init_params: layer width must be >= 1");
        const double bound = std::sqrt(6.0 / in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
                l.weights(r, c) = dist(rng);
        p.layers.push_back(std::move(l));
        in = out;
    }
    return p;
}

void write_params(std::ostream &os, const NetParams &params)
{
    params.validate();
    os << "rissim-beamset-net v1\n";
    os << "input_dim " << params.input_dim << '\n';
    os << "seed " << params.seed << '\n';
    os << "layers " << params.layers.size();
    for (int d : params.layer_dims())
        os << ' ' << d;
    os << '\n';
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const DenseLayer &layer = params.layers[l];
        os << "W " << l << ' ' << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                os << (c ? " " : "") << format_double(layer.weights(r, c));
            os << '\n';
        }
        os << "b " << l << ' ' << layer.bias.size() << '\n';
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            os << (r ? " " : "") << format_double(layer.bias(r));
        os << '\n';
    }
}

NetParams read_params(std::istream &is)
{
    std::string line;
    auto next = [&](const char *what) {
        if (!std::getline(is, line))
            throw std::invalid_argument(std::string("read_params: truncated input, expected ") + what);
        return split_whitespace(line);
    };
    auto expect_key = [](const std::vector<std::string> &tok, const char *key, std::size_t min_size) {
        if (tok.size() < min_size || tok[0] != key)
            throw std::invalid_argument(std::string("read_params: expected '") + key + "' line");
    };

    auto tok = next("header");
    if (tok.size() != 2 || tok[0] != "rissim-beamset-net" || tok[1] != "v1")
        throw std::invalid_argument("read_params: unsupported format header");
    NetParams p;
    tok = next("input_dim");
    expect_key(tok, "input_dim", 2);
    p.input_dim = std::stoi(tok[1]);
    tok = next("seed");
    expect_key(tok, "seed", 2);
    p.seed = std::stoull(tok[1]);
    tok = next("layers");
    expect_key(tok, "layers", 2);
    const std::size_t n_layers = std::stoul(tok[1]);
    if (tok.size() != n_layers + 2)
        throw std::invalid_argument("read_params: layer count does not match widths");

    Eigen::Index in = p.input_dim;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Eigen::Index out = std::stol(tok[l + 2]);
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
        auto wt = next("W");
        expect_key(wt, "W", 4);
        if (std::stol(wt[2]) != out || std::stol(wt[3]) != in)
            throw std::invalid_argument("read_params: weight block shape mismatch");
        for (Eigen::Index r = 0; r < out; ++r) {
            const auto row = next("weight row");
            if (static_cast<Eigen::Index>(row.size()) != in)
                throw std::invalid_argument("read_params: weight row width mismatch");
            for (Eigen::Index c = 0; c < in; ++c)
                layer.weights(r, c) = parse_double(row[static_cast<std::size_t>(c)]);
        }
        auto bt = next("b");
        expect_key(bt, "b", 3);
        const auto row = next("bias row");
        if (static_cast<Eigen::Index>(row.size()) != out)
            throw std::invalid_argument("read_params: bias width mismatch");
        for (Eigen::Index r = 0; r < out; ++r)
            layer.bias(r) = parse_double(row[static_cast<std::size_t>(r)]);
        p.layers.push_back(std::move(layer));
        in = out;
    }
    p.validate();
    return p;
}

MultiHotTarget MultiHotTarget::from_set(const BeamSet &set, std::size_t codebook_size)
{
    set.validate(codebook_size);
    MultiHotTarget t;
    t.bits.assign(codebook_size, 0.0);
    for (std::size_t j : set.indices())
        t.bits[j] = 1.0;
    return t;
}

BeamSet MultiHotTarget::to_set() const
{
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j] != 0.0)
            idx.push_back(j);
    return BeamSet(std::move(idx));
}

ScoreVector forward(const NetParams &params, const UEInfoMatrix &V)
{
    const ForwardPass fp = run_layers(params, V);
    ScoreVector out;
    out.scores.resize(static_cast<std::size_t>(fp.logits.size()));
    for (Eigen::Index j = 0; j < fp.logits.size(); ++j)
        out.scores[static_cast<std::size_t>(j)] = clamp_score(sigmoid(fp.logits(j)));
    return out;
}

double loss(const NetParams &params, std::span<const TrainingSample> batch)
{
    if (batch.empty())
        throw std::invalid_argument("loss: empty batch");
    double acc = 0.0;
    for (const TrainingSample &s : batch) {
        check_target(params, s.target);
        acc += sample_loss_bits(run_layers(params, s.V).logits, s.target);
    }
    return acc;
}

std::vector<DenseLayer> grad(const NetParams &params, std::span<const TrainingSample> batch)
{
    if (batch.empty())
        throw std::invalid_argument("grad: empty batch");
    std::vector<DenseLayer> g = zeros_like(params);
    for (const TrainingSample &s : batch)
        accumulate_grad(params, s, g);
    return g;
}

void TrainConfig::validate() const
{
    if (!(learning_rate >= 0.0))
        throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (batch_size < 1 || epochs < 0)
        throw std::invalid_argument("TrainConfig: batch_size >= 1 and epochs >= 0 required");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must lie in [0, 1)");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("TrainConfig: threshold must lie in (0, 1)");
}

double mean_loss_per_beam(const NetParams &params, std::span<const TrainingSample> samples)
{
    if (samples.empty())
        return std::numeric_limits<double>::quiet_NaN();
    return loss(params, samples) / (static_cast<double>(samples.size()) * params.output_dim());
}

TrainResult train(std::span<const TrainingSample> train_set, std::span<const TrainingSample> test_set,
                  const TrainConfig &config, const NetParams *initial)
{
    config.validate();
    if (train_set.empty())
        throw std::invalid_argument("train: empty training set");

    TrainResult res;
    if (initial) {
        res.params = *initial;
    } else {
        std::vector<int> dims = config.hidden;
        dims.push_back(static_cast<int>(train_set.front().target.bits.size()));
        res.params = init_params(train_set.front().V.feature_dim(), dims, config.seed);
    }
    res.params.validate();

    std::vector<DenseLayer> velocity = zeros_like(res.params);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<DenseLayer> g = zeros_like(res.params);
            for (std::size_t i = start; i < stop; ++i)
                accumulate_grad(res.params, train_set[order[i]], g);
            const double step = config.learning_rate / static_cast<double>(stop - start);
            for (std::size_t l = 0; l < g.size(); ++l) {
                velocity[l].weights = config.momentum * velocity[l].weights - step * g[l].weights;
                velocity[l].bias = config.momentum * velocity[l].bias - step * g[l].bias;
                res.params.layers[l].weights += velocity[l].weights;
                res.params.layers[l].bias += velocity[l].bias;
            }
        }
        res.curve.push_back(
            {epoch, mean_loss_per_beam(res.params, train_set), mean_loss_per_beam(res.params, test_set)});
    }
    return res;
}

std::vector<std::size_t> rank_beams(const ScoreVector &scores)
{
    std::vector<std::size_t> idx(scores.scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores.scores[a] > scores.scores[b]; });
    return idx;
}

BeamSet predict_set(const ScoreVector &scores, const PredictMode &mode)
{
    if (mode.kind == PredictMode::Kind::Threshold) {
        if (!(mode.threshold > 0.0 && mode.threshold < 1.0))
            throw std::invalid_argument("predict_set: threshold must lie in (0, 1)");
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < scores.scores.size(); ++j)
            if (scores.scores[j] >= mode.threshold)
                idx.push_back(j);
        return BeamSet(std::move(idx));
    }
    if (mode.k > scores.scores.size())
        throw std::invalid_argument("predict_set: k = " + std::to_string(mode.k) + " exceeds codebook size " +
                                    std::to_string(scores.scores.size()));
    std::vector<std::size_t> ranked = rank_beams(scores);
    ranked.resize(mode.k);
    return BeamSet(std::move(ranked));
}

BeamSet predict_set(const NetParams &params, const UEInfoMatrix &V, const PredictMode &mode)
{
    return predict_set(forward(params, V), mode);
}

SetMetrics eval_metrics(std::span<const BeamSet> predictions, std::span<const BeamSet> truths)
{
    if (predictions.size() != truths.size())
        throw std::invalid_argument("eval_metrics: prediction and truth lists differ in length");
    if (predictions.empty())
        return {};
    double acc = 0.0;
    double rec = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto p = predictions[i].indices();
        const auto t = truths[i].indices();
        std::vector<std::size_t> common;
        std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(common));
        const double hit = static_cast<double>(common.size());
        acc += p.empty() ? (t.empty() ? 1.0 : 0.0) : hit / static_cast<double>(p.size());
        rec += t.empty() ? 1.0 : hit / static_cast<double>(t.size());
    }
    const double n = static_cast<double>(predictions.size());
    return {acc / n, rec / n};
}

} // namespace rissim
