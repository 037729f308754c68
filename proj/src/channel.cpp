// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/channel.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace rissim {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x)
{
    if (x == 0.0)
        return 1.0;
    const double px = kPi * x;
    return std::sin(px) / px;
}

// The FFTW planner is not re-entrant; execution on a private plan is.
std::mutex &fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

ArrayGeometry::ArrayGeometry(int rows_, int cols_, double spacing_)
    : rows(rows_), cols(cols_), spacing(spacing_)
{
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("ArrayGeometry: rows and cols must be >= 1");
    if (!(spacing > 0.0))
        throw std::invalid_argument("ArrayGeometry: spacing must be positive");
}

void WidebandParams::validate() const
{
    if (subcarriers < 1)
        throw std::invalid_argument("WidebandParams: subcarriers must be >= 1");
    if (max_delay_taps < 1)
        throw std::invalid_argument("WidebandParams: max_delay_taps must be >= 1");
    if (!(sample_period_s > 0.0))
        throw std::invalid_argument("WidebandParams: sample period must be positive");
    if (!(pathloss > 0.0))
        throw std::invalid_argument("WidebandParams: pathloss must be positive");
    if (!(rolloff >= 0.0 && rolloff <= 1.0))
        throw std::invalid_argument("WidebandParams: rolloff must lie in [0, 1]");
}

double pulse_value(const WidebandParams &params, double t_s)
{
    const double x = t_s / params.sample_period_s;
    if (params.pulse == PulseShape::Sinc || params.rolloff == 0.0)
        return sinc(x);

    const double beta = params.rolloff;
    const double denom = 1.0 - (2.0 * beta * x) * (2.0 * beta * x);
    // Removable singularity at |x| = 1 / (2 beta).
    if (std::abs(denom) < 1e-12)
        return (kPi / 4.0) * sinc(1.0 / (2.0 * beta));
    return sinc(x) * std::cos(kPi * beta * x) / denom;
}

FreqChannel::FreqChannel(int subcarriers, int elements)
    : FreqChannel(subcarriers, elements,
                  std::vector<cplx>(static_cast<std::size_t>(std::max(subcarriers, 0)) *
                                    static_cast<std::size_t>(std::max(elements, 0))))
{
}

FreqChannel::FreqChannel(int subcarriers, int elements, std::vector<cplx> data)
    : subcarriers_(subcarriers), elements_(elements), data_(std::move(data))
{
    if (subcarriers < 1 || elements < 1)
        throw std::invalid_argument("FreqChannel: K and M must be >= 1");
    if (data_.size() != static_cast<std::size_t>(subcarriers) * static_cast<std::size_t>(elements))
        throw std::invalid_argument("FreqChannel: data size does not equal K * M");
    for (const cplx &v : data_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("FreqChannel: non-finite entry");
}

std::span<cplx> FreqChannel::subcarrier(int k)
{
    return {data_.data() + static_cast<std::size_t>(k) * elements_, static_cast<std::size_t>(elements_)};
}

std::span<const cplx> FreqChannel::subcarrier(int k) const
{
    return {data_.data() + static_cast<std::size_t>(k) * elements_, static_cast<std::size_t>(elements_)};
}

void FreqChannel::scale(double factor)
{
    for (cplx &v : data_)
        v *= factor;
}

double FreqChannel::mean_power() const
{
    double acc = 0.0;
    for (const cplx &v : data_)
        acc += std::norm(v);
    return acc / static_cast<double>(data_.size());
}

void LinkBudget::validate() const
{
    if (!(tx_power >= 0.0) || !(noise_power > 0.0))
        throw std::invalid_argument("LinkBudget: tx_power must be >= 0 and noise_power > 0");
}

double LinkBudget::snr(int subcarriers) const
{
    validate();
    return tx_power / (static_cast<double>(subcarriers) * noise_power);
}

CVector array_response(const ArrayGeometry &geom, double azimuth_rad, double elevation_rad)
{
    const double u = std::cos(elevation_rad) * std::sin(azimuth_rad);
    const double v = std::sin(elevation_rad);
    CVector out(static_cast<std::size_t>(geom.elements()));
    for (int r = 0; r < geom.rows; ++r)
        for (int c = 0; c < geom.cols; ++c)
            out[static_cast<std::size_t>(r * geom.cols + c)] =
                std::polar(1.0, 2.0 * kPi * geom.spacing * (c * u + r * v));
    return out;
}

CVector delay_domain_channel(std::span<const PathCluster> clusters, const ArrayGeometry &geom,
                             const WidebandParams &params, int tap)
{
    params.validate();
    if (tap < 0 || tap >= params.max_delay_taps)
        throw std::out_of_range("delay_domain_channel: tap " + std::to_string(tap) + " outside [0, " +
                                std::to_string(params.max_delay_taps) + ")");

    const double scale = std::sqrt(geom.elements() / params.pathloss);
    CVector out(static_cast<std::size_t>(geom.elements()), cplx{});
    for (const PathCluster &cl : clusters) {
        const double p = pulse_value(params, tap * params.sample_period_s - cl.delay_s);
        if (p == 0.0)
            continue;
        const cplx weight = scale * cl.gain * p;
        const CVector a = array_response(geom, cl.azimuth_rad, cl.elevation_rad);
        for (std::size_t m = 0; m < out.size(); ++m)
            out[m] += weight * a[m];
    }
    return out;
}

FreqChannel freq_channel(std::span<const PathCluster> clusters, const ArrayGeometry &geom,
                         const WidebandParams &params)
{
    params.validate();
    const int K = params.subcarriers;
    const int M = geom.elements();

    // Taps beyond K alias onto d mod K, which keeps the K-point DFT exact.
    std::vector<cplx> folded(static_cast<std::size_t>(K) * M, cplx{});
    for (int d = 0; d < params.max_delay_taps; ++d) {
        const CVector tap = delay_domain_channel(clusters, geom, params, d);
        cplx *row = folded.data() + static_cast<std::size_t>(d % K) * M;
        for (int m = 0; m < M; ++m)
            row[m] += tap[static_cast<std::size_t>(m)];
    }

    std::vector<cplx> out(folded.size());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int n[] = {K};
        // One length-K transform per element; samples are M apart.
        plan = fftw_plan_many_dft(1, n, M, reinterpret_cast<fftw_complex *>(folded.data()), nullptr, M, 1,
                                  reinterpret_cast<fftw_complex *>(out.data()), nullptr, M, 1, FFTW_FORWARD,
                                  FFTW_ESTIMATE);
    }
    if (plan == nullptr)
        throw std::runtime_error("freq_channel: FFTW planning failed");
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return FreqChannel(K, M, std::move(out));
}

FreqChannel apply_precoder(std::span<const FreqChannel> per_antenna, std::span<const cplx> precoder)
{
    if (per_antenna.empty() || per_antenna.size() != precoder.size())
        throw std::invalid_argument("apply_precoder: need one channel per precoder entry");
    const int K = per_antenna.front().subcarriers();
    const int M = per_antenna.front().elements();
    FreqChannel out(K, M);
    for (std::size_t n = 0; n < per_antenna.size(); ++n) {
        const FreqChannel &h = per_antenna[n];
        if (h.subcarriers() != K || h.elements() != M)
            throw std::invalid_argument("apply_precoder: per-antenna channel dimensions differ");
        for (int k = 0; k < K; ++k)
            for (int m = 0; m < M; ++m)
                out.at(k, m) += h.at(k, m) * precoder[n];
    }
    return out;
}

double free_space_pathloss(double distance_m, double wavelength_m)
{
    const double x = 4.0 * kPi * distance_m / wavelength_m;
    return x * x;
}

std::vector<PathCluster> clusters_from_geometry(const GeometryLinkSpec &link, std::uint64_t seed)
{
    const Vec3 rx = link.rx_pose.position;
    const double direct = distance(link.tx_pos, rx);
    if (direct == 0.0)
        throw std::invalid_argument("clusters_from_geometry: tx and rx coincide");

    auto clear = [&](Vec3 a, Vec3 b) {
        for (const Box &box : link.blockers)
            if (segment_intersects_box(a, b, box))
                return false;
        return true;
    };

    // One phase per candidate path, drawn whether or not the path is visible,
    // so blocking one path leaves the phases of the others unchanged.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(-kPi, kPi);

    std::vector<PathCluster> out;
    const double los_phase = phase(rng);
    if (clear(link.tx_pos, rx)) {
        const Direction dir = arrival_direction(link.rx_pose, link.tx_pos);
        out.push_back({std::polar(1.0, los_phase), direct / kSpeedOfLight, dir.azimuth_rad, dir.elevation_rad});
    }
    for (const Vec3 &refl : link.reflectors) {
        const double ph = phase(rng);
        if (refl == link.tx_pos || refl == rx)
            continue;
        if (!clear(link.tx_pos, refl) || !clear(refl, rx))
            continue;
        const double length = distance(link.tx_pos, refl) + distance(refl, rx);
        const Direction dir = arrival_direction(link.rx_pose, refl);
        out.push_back({std::polar(link.reflection_amplitude * direct / length, ph), length / kSpeedOfLight,
                       dir.azimuth_rad, dir.elevation_rad});
    }
    return out;
}

std::vector<PathCluster> relative_delays(std::vector<PathCluster> clusters)
{
    if (clusters.empty())
        return clusters;
    double earliest = clusters.front().delay_s;
    for (const PathCluster &c : clusters)
        earliest = std::min(earliest, c.delay_s);
    for (PathCluster &c : clusters)
        c.delay_s -= earliest;
    return clusters;
}

} // namespace rissim
