// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/beams.hpp"
#include "rissim/textio.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rissim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_shape(const FreqChannel &a, const FreqChannel &b, const char *what)
{
    if (a.subcarriers() != b.subcarriers() || a.elements() != b.elements())
        throw std::invalid_argument(std::string(what) + ": channel dimensions differ");
}

void require_beam_length(const FreqChannel &h, std::size_t beam_len, const char *what)
{
    if (static_cast<std::size_t>(h.elements()) != beam_len)
        throw std::invalid_argument(std::string(what) + ": beam length does not match channel");
}

const char *kind_name(CodebookKind kind)
{
    switch (kind) {
    case CodebookKind::DftUpa:
        return "DFT_UPA";
    case CodebookKind::QuantizedAll:
        return "QuantizedAll";
    case CodebookKind::Custom:
        return "Custom";
    }
    return "Custom";
}

CodebookKind kind_from_name(const std::string &name)
{
    if (name == "DFT_UPA")
        return CodebookKind::DftUpa;
    if (name == "QuantizedAll")
        return CodebookKind::QuantizedAll;
    if (name == "Custom")
        return CodebookKind::Custom;
    throw std::invalid_argument("read_codebook: unknown kind '" + name + "'");
}

} // namespace

double wrap_phase(double phase)
{
    double w = phase - kTwoPi * std::floor((phase + kPi) / kTwoPi);
    if (w >= kPi)
        w -= kTwoPi;
    if (w < -kPi)
        w = -kPi;
    return w;
}

double quantize_phase(double phase, int bits)
{
    if (bits < 1 || bits > 24)
        throw std::invalid_argument("quantize_phase: bits must be in [1, 24]");
    const double step = kTwoPi / static_cast<double>(1u << bits);
    return wrap_phase(std::round(phase / step) * step);
}

ReflectBeam::ReflectBeam(std::vector<double> phases) : phases_(std::move(phases))
{
    for (double &p : phases_) {
        if (!std::isfinite(p))
            throw std::invalid_argument("ReflectBeam: non-finite phase");
        p = wrap_phase(p);
    }
}

cplx ReflectBeam::element(std::size_t m) const { return std::polar(1.0, phases_[m]); }

CVector ReflectBeam::to_vector() const
{
    CVector out(phases_.size());
    for (std::size_t m = 0; m < phases_.size(); ++m)
        out[m] = element(m);
    return out;
}

ReflectBeam operator*(const ReflectBeam &a, const ReflectBeam &b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("ReflectBeam product: length mismatch");
    std::vector<double> sum(a.size());
    for (std::size_t m = 0; m < a.size(); ++m)
        sum[m] = a.phases_[m] + b.phases_[m];
    return ReflectBeam(std::move(sum));
}

void PhaseCodebook::validate() const
{
    if (beams.empty())
        throw std::invalid_argument("PhaseCodebook: empty codebook");
    const std::size_t m = beams.front().size();
    if (m == 0)
        throw std::invalid_argument("PhaseCodebook: zero-length beams");
    for (const ReflectBeam &b : beams)
        if (b.size() != m)
            throw std::invalid_argument("PhaseCodebook: beams of differing length");
}

PhaseCodebook make_dft_codebook(const ArrayGeometry &geom, const DftCodebookSpec &spec)
{
    if (spec.oversample_az < 1 || spec.oversample_el < 1)
        throw std::invalid_argument("make_dft_codebook: oversampling must be >= 1");
    const int n_u = geom.cols * spec.oversample_az;
    const int n_v = geom.rows * spec.oversample_el;
    const double du = 1.0 / (geom.spacing * n_u);
    const double dv = 1.0 / (geom.spacing * n_v);

    PhaseCodebook cb;
    cb.kind = CodebookKind::DftUpa;
    cb.phase_bits = spec.phase_bits;
    cb.beams.reserve(static_cast<std::size_t>(n_u) * n_v);
    for (int iv = 0; iv < n_v; ++iv) {
        const double v = (iv - n_v / 2) * dv;
        for (int iu = 0; iu < n_u; ++iu) {
            const double u = (iu - n_u / 2) * du;
            std::vector<double> phases(static_cast<std::size_t>(geom.elements()));
            for (int r = 0; r < geom.rows; ++r)
                for (int c = 0; c < geom.cols; ++c) {
                    double ph = -kTwoPi * geom.spacing * (c * u + r * v);
                    if (spec.phase_bits > 0)
                        ph = quantize_phase(ph, spec.phase_bits);
                    phases[static_cast<std::size_t>(r * geom.cols + c)] = ph;
                }
            cb.beams.emplace_back(std::move(phases));
        }
    }
    return cb;
}

PhaseCodebook make_quantized_all_codebook(std::size_t elements, int bits)
{
    if (elements == 0 || bits < 1 || bits * elements > 20)
        throw std::invalid_argument("make_quantized_all_codebook: need 1 <= bits and bits * M <= 20");
    const std::size_t levels = std::size_t{1} << bits;
    const double step = kTwoPi / static_cast<double>(levels);
    const std::size_t count = std::size_t{1} << (bits * elements);

    PhaseCodebook cb;
    cb.kind = CodebookKind::QuantizedAll;
    cb.phase_bits = bits;
    cb.beams.reserve(count);
    std::vector<double> phases(elements);
    for (std::size_t j = 0; j < count; ++j) {
        std::size_t rest = j;
        for (std::size_t m = 0; m < elements; ++m) {
            phases[m] = static_cast<double>(rest % levels) * step;
            rest /= levels;
        }
        cb.beams.emplace_back(phases);
    }
    return cb;
}

void write_codebook(std::ostream &os, const PhaseCodebook &cb)
{
    cb.validate();
    os << "# rissim-codebook v1 kind=" << kind_name(cb.kind) << " bits=" << cb.phase_bits
       << " elements=" << cb.elements() << " size=" << cb.size() << '\n';
    for (std::size_t j = 0; j < cb.size(); ++j) {
        os << j;
        for (double p : cb.beams[j].phases())
            os << ' ' << format_double(p);
        os << '\n';
    }
}

PhaseCodebook read_codebook(std::istream &is)
{
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("read_codebook: empty input");
    const auto header = split_whitespace(line);
    if (header.size() != 7 || header[0] != "#" || header[1] != "rissim-codebook" || header[2] != "v1")
        throw std::invalid_argument("read_codebook: bad header '" + line + "'");

    auto field = [&](std::size_t i, const std::string &key) {
        const std::string &tok = header[i];
        if (tok.rfind(key + "=", 0) != 0)
            throw std::invalid_argument("read_codebook: expected " + key + "= in header");
        return tok.substr(key.size() + 1);
    };
    PhaseCodebook cb;
    cb.kind = kind_from_name(field(3, "kind"));
    cb.phase_bits = std::stoi(field(4, "bits"));
    const std::size_t elements = std::stoul(field(5, "elements"));
    const std::size_t size = std::stoul(field(6, "size"));

    cb.beams.reserve(size);
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto tok = split_whitespace(line);
        if (tok.size() != elements + 1)
            throw std::invalid_argument("read_codebook: line " + std::to_string(cb.beams.size() + 2) +
                                        " has wrong field count");
        if (std::stoul(tok[0]) != cb.beams.size())
            throw std::invalid_argument("read_codebook: indices out of order");
        std::vector<double> phases(elements);
        for (std::size_t m = 0; m < elements; ++m)
            phases[m] = parse_double(tok[m + 1]);
        cb.beams.emplace_back(std::move(phases));
    }
    if (cb.beams.size() != size)
        throw std::invalid_argument("read_codebook: expected " + std::to_string(size) + " beams, got " +
                                    std::to_string(cb.beams.size()));
    cb.validate();
    return cb;
}

std::string codebook_hash(const PhaseCodebook &cb)
{
    std::ostringstream ss;
    write_codebook(ss, cb);
    return sha256_hex(ss.str());
}

BeamSet::BeamSet(std::vector<std::size_t> indices) : indices_(std::move(indices))
{
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

void BeamSet::insert(std::size_t index)
{
    auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
    if (it == indices_.end() || *it != index)
        indices_.insert(it, index);
}

bool BeamSet::contains(std::size_t index) const
{
    return std::binary_search(indices_.begin(), indices_.end(), index);
}

void BeamSet::validate(std::size_t codebook_size) const
{
    if (!indices_.empty() && indices_.back() >= codebook_size)
        throw std::out_of_range("BeamSet: index " + std::to_string(indices_.back()) +
                                " outside codebook of size " + std::to_string(codebook_size));
}

ReferenceVector::ReferenceVector(CVector entries) : entries_(std::move(entries))
{
    for (const cplx &e : entries_)
        if (std::abs(std::abs(e) - 1.0) > 1e-9)
            throw std::invalid_argument("ReferenceVector: entries must be unit-modulus");
}

ReferenceVector ReferenceVector::ones(std::size_t elements) { return ReferenceVector(CVector(elements, cplx{1.0, 0.0})); }

FreqChannel composite_channel(const FreqChannel &h_T, const FreqChannel &h_R)
{
    require_same_shape(h_T, h_R, "composite_channel");
    FreqChannel g(h_T.subcarriers(), h_T.elements());
    for (int k = 0; k < g.subcarriers(); ++k)
        for (int m = 0; m < g.elements(); ++m)
            g.at(k, m) = h_R.at(k, m) * h_T.at(k, m);
    return g;
}

double beam_gain(const FreqChannel &composite, const ReflectBeam &psi)
{
    require_beam_length(composite, psi.size(), "beam_gain");
    const CVector w = psi.to_vector();
    double acc = 0.0;
    for (int k = 0; k < composite.subcarriers(); ++k) {
        const auto g = composite.subcarrier(k);
        cplx s{};
        for (std::size_t m = 0; m < w.size(); ++m)
            s += g[m] * w[m];
        acc += std::norm(s);
    }
    return acc / composite.subcarriers();
}

double achievable_rate(const FreqChannel &composite, const ReflectBeam &psi, double snr)
{
    require_beam_length(composite, psi.size(), "achievable_rate");
    const CVector w = psi.to_vector();
    double acc = 0.0;
    for (int k = 0; k < composite.subcarriers(); ++k) {
        const auto g = composite.subcarrier(k);
        cplx s{};
        for (std::size_t m = 0; m < w.size(); ++m)
            s += g[m] * w[m];
        acc += std::log2(1.0 + snr * std::norm(s));
    }
    return acc / composite.subcarriers();
}

double achievable_rate(const FreqChannel &h_T, const FreqChannel &h_R, const ReflectBeam &psi,
                       const LinkBudget &budget)
{
    return achievable_rate(composite_channel(h_T, h_R), psi, budget.snr(h_T.subcarriers()));
}

JointSelection joint_beam_search(const FreqChannel &h_T, const FreqChannel &h_R, const PhaseCodebook &P,
                                 const PhaseCodebook &Q, const LinkBudget &budget)
{
    P.validate();
    Q.validate();
    const FreqChannel g = composite_channel(h_T, h_R);
    const double snr = budget.snr(g.subcarriers());

    JointSelection best{0, 0, -1.0};
    for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = 0; j < Q.size(); ++j) {
            const double r = achievable_rate(g, P[i] * Q[j], snr);
            if (r > best.rate)
                best = {i, j, r};
        }
    return best;
}

double bs_alignment(const FreqChannel &h_T, const ReflectBeam &p, const ReferenceVector &ref)
{
    require_beam_length(h_T, p.size(), "bs_alignment");
    if (ref.size() != p.size())
        throw std::invalid_argument("bs_alignment: reference length mismatch");
    const CVector w = p.to_vector();
    const auto a = ref.entries();
    double acc = 0.0;
    for (int k = 0; k < h_T.subcarriers(); ++k) {
        const auto h = h_T.subcarrier(k);
        cplx s{}; // (h (.) p)^H conj(a)
        for (std::size_t m = 0; m < w.size(); ++m)
            s += std::conj(h[m] * w[m]) * std::conj(a[m]);
        acc += std::norm(s);
    }
    return acc / h_T.subcarriers();
}

double ue_alignment(const FreqChannel &h_R, const ReflectBeam &q, const ReferenceVector &ref)
{
    require_beam_length(h_R, q.size(), "ue_alignment");
    if (ref.size() != q.size())
        throw std::invalid_argument("ue_alignment: reference length mismatch");
    const CVector w = q.to_vector();
    const auto a = ref.entries();
    double acc = 0.0;
    for (int k = 0; k < h_R.subcarriers(); ++k) {
        const auto h = h_R.subcarrier(k);
        cplx s{}; // (h (.) q)^H a
        for (std::size_t m = 0; m < w.size(); ++m)
            s += std::conj(h[m] * w[m]) * a[m];
        acc += std::norm(s);
    }
    return acc / h_R.subcarriers();
}

std::size_t decoupled_bs_beam(const FreqChannel &h_T, const PhaseCodebook &P, const ReferenceVector &ref)
{
    P.validate();
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double v = bs_alignment(h_T, P[i], ref);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    return best;
}

std::size_t decoupled_ue_beam(const FreqChannel &h_R, const PhaseCodebook &Q, const ReferenceVector &ref)
{
    Q.validate();
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t j = 0; j < Q.size(); ++j) {
        const double v = ue_alignment(h_R, Q[j], ref);
        if (v > best_val) {
            best_val = v;
            best = j;
        }
    }
    return best;
}

BeamSet optimal_beam_set(std::span<const FreqChannel> ue_channels, const PhaseCodebook &Q,
                         const ReferenceVector &ref)
{
    BeamSet out;
    for (const FreqChannel &h : ue_channels)
        out.insert(decoupled_ue_beam(h, Q, ref));
    return out;
}

double equal_gain_rate(const FreqChannel &composite, double snr)
{
    double acc = 0.0;
    for (int k = 0; k < composite.subcarriers(); ++k) {
        double amplitude = 0.0; // |g_k^T exp(-j angle(g_k))| = sum_m |g_km|
        for (const cplx &g : composite.subcarrier(k))
            amplitude += std::abs(g);
        acc += std::log2(1.0 + snr * amplitude * amplitude);
    }
    return acc / composite.subcarriers();
}

double equal_gain_rate(const FreqChannel &h_T, const FreqChannel &h_R, const LinkBudget &budget)
{
    return equal_gain_rate(composite_channel(h_T, h_R), budget.snr(h_T.subcarriers()));
}

std::vector<double> best_quantized_alignment(std::span<const cplx> coefficients, int bits)
{
    if (bits < 1 || bits > 16)
        throw std::invalid_argument("best_quantized_alignment: bits must be in [1, 16]");
    const std::size_t M = coefficients.size();
    if (M == 0)
        throw std::invalid_argument("best_quantized_alignment: no coefficients");
    const int levels = 1 << bits;
    const double step = kTwoPi / levels;

    std::vector<double> base(M);
    for (std::size_t m = 0; m < M; ++m)
        base[m] = std::arg(coefficients[m]);

    // Element m switches level whenever mu - base_m crosses a half step.
    std::vector<double> breaks;
    breaks.reserve(M * static_cast<std::size_t>(levels));
    for (std::size_t m = 0; m < M; ++m)
        for (int l = 0; l < levels; ++l)
            breaks.push_back(wrap_phase(base[m] + (l + 0.5) * step) + kPi); // in [0, 2 pi)
    std::sort(breaks.begin(), breaks.end());

    std::vector<double> best(M, 0.0);
    std::vector<double> trial(M);
    double best_mag = -1.0;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        const double lo = breaks[i];
        const double hi = (i + 1 < breaks.size()) ? breaks[i + 1] : breaks.front() + kTwoPi;
        if (hi - lo <= 0.0)
            continue;
        const double mu = 0.5 * (lo + hi) - kPi;
        cplx sum{};
        for (std::size_t m = 0; m < M; ++m) {
            trial[m] = quantize_phase(mu - base[m], bits);
            sum += coefficients[m] * std::polar(1.0, trial[m]);
        }
        const double mag = std::abs(sum);
        if (mag > best_mag) {
            best_mag = mag;
            best = trial;
        }
    }
    return best;
}

LosGapResult los_optimality_gap(const FreqChannel &h_T, const FreqChannel &h_R, int phase_bits,
                                const LinkBudget &budget)
{
    require_same_shape(h_T, h_R, "los_optimality_gap");
    for (const FreqChannel *h : {&h_T, &h_R}) {
        double scale = 0.0;
        for (const cplx &v : h->data())
            scale = std::max(scale, std::abs(v));
        for (int k = 1; k < h->subcarriers(); ++k)
            for (int m = 0; m < h->elements(); ++m)
                if (std::abs(h->at(k, m) - h->at(0, m)) > 1e-9 * scale)
                    throw std::invalid_argument("los_optimality_gap: channel is not flat across subcarriers");
    }

    const auto t = h_T.subcarrier(0);
    const auto r = h_R.subcarrier(0);
    const std::size_t M = t.size();

    // With a = 1 the BS-side objective is |sum h_T p|^2, the UE-side one
    // |sum h_R q|^2 and the joint one |sum h_R h_T psi|^2.
    CVector joint(M);
    for (std::size_t m = 0; m < M; ++m)
        joint[m] = r[m] * t[m];

    LosGapResult res;
    const ReflectBeam p(best_quantized_alignment(t, phase_bits));
    const ReflectBeam q(best_quantized_alignment(r, phase_bits));
    res.decoupled_beam = p * q;
    res.joint_beam = ReflectBeam(best_quantized_alignment(joint, phase_bits));

    const FreqChannel g = composite_channel(h_T, h_R);
    const double snr = budget.snr(g.subcarriers());
    res.decoupled_rate = achievable_rate(g, res.decoupled_beam, snr);
    res.joint_rate = achievable_rate(g, res.joint_beam, snr);
    res.gap = res.joint_rate > 0.0 ? 1.0 - res.decoupled_rate / res.joint_rate : 0.0;
    return res;
}

} // namespace rissim
