// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// Wideband geometric channel model for the BS-RIS and UE-RIS links.
//
// A link is a list of path clusters. Each cluster contributes one ray with a
// complex gain, an absolute delay and an angle of arrival at the RIS. The
// delay-domain taps are
//
//     h_d = sqrt(M / rho) * sum_l gain_l * p(d Ts - delay_l) * a(az_l, el_l)
//
// and the per-subcarrier vectors are their K-point DFT,
//
//     h_k = sum_{d=0}^{D-1} h_d exp(-j 2 pi k d / K),   k = 0..K-1.

#pragma once

#include "rissim/geometry.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace rissim {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

inline constexpr double kSpeedOfLight = 299792458.0;

struct ArrayGeometry {
    int rows = 1;
    int cols = 1;
    double spacing = 0.5; ///< element spacing in wavelengths

    ArrayGeometry() = default;
    ArrayGeometry(int rows_, int cols_, double spacing_ = 0.5);

    int elements() const { return rows * cols; }
};

struct PathCluster {
    cplx gain;
    double delay_s = 0.0;
    double azimuth_rad = 0.0;
    double elevation_rad = 0.0;

    friend bool operator==(const PathCluster &, const PathCluster &) = default;
};

enum class PulseShape { Sinc, RaisedCosine };

struct WidebandParams {
    int subcarriers = 16;          ///< K
    double sample_period_s = 1e-8; ///< Ts
    int max_delay_taps = 16;       ///< D
    double pathloss = 1.0;         ///< rho, linear
    PulseShape pulse = PulseShape::Sinc;
    double rolloff = 0.3;

    /// Throws std::invalid_argument when any field is out of range.
    void validate() const;
};

/// Evaluate the pulse p(t) at `t_s` seconds.
double pulse_value(const WidebandParams &params, double t_s);

/// Per-subcarrier complex channel vectors, stored subcarrier-major.
class FreqChannel {
public:
    FreqChannel() = default;
    FreqChannel(int subcarriers, int elements);
    FreqChannel(int subcarriers, int elements, std::vector<cplx> data);

    int subcarriers() const { return subcarriers_; }
    int elements() const { return elements_; }

    std::span<cplx> subcarrier(int k);
    std::span<const cplx> subcarrier(int k) const;

    cplx &at(int k, int m) { return data_[static_cast<std::size_t>(k) * elements_ + m]; }
    const cplx &at(int k, int m) const { return data_[static_cast<std::size_t>(k) * elements_ + m]; }

    std::span<const cplx> data() const { return data_; }

    /// Multiply every entry by `factor`.
    void scale(double factor);
    /// Mean of |h_{k,m}|^2 over all subcarriers and elements.
    double mean_power() const;

    friend bool operator==(const FreqChannel &, const FreqChannel &) = default;

private:
    int subcarriers_ = 0;
    int elements_ = 0;
    std::vector<cplx> data_;
};

struct LinkBudget {
    double tx_power = 1.0;    ///< p_t, watts
    double noise_power = 1.0; ///< sigma_n^2, watts

    void validate() const;
    /// SNR = p_t / (K sigma_n^2); allows p_t = 0 as the zero-SNR limit.
    double snr(int subcarriers) const;
};

/// UPA response a(az, el); element (r, c) sits at index r * cols + c.
CVector array_response(const ArrayGeometry &geom, double azimuth_rad, double elevation_rad);

CVector delay_domain_channel(std::span<const PathCluster> clusters, const ArrayGeometry &geom,
                             const WidebandParams &params, int tap);

FreqChannel freq_channel(std::span<const PathCluster> clusters, const ArrayGeometry &geom,
                         const WidebandParams &params);

/// Effective BS-side channel h_{T,k} = H_{T,k} f from one FreqChannel per BS antenna.
FreqChannel apply_precoder(std::span<const FreqChannel> per_antenna, std::span<const cplx> precoder);

/// Free-space pathloss (4 pi d / lambda)^2, linear.
double free_space_pathloss(double distance_m, double wavelength_m);

struct GeometryLinkSpec {
    Vec3 tx_pos;
    ArrayPose rx_pose;                ///< the RIS
    std::vector<Vec3> reflectors;     ///< point scatterers
    std::vector<Box> blockers;
    double carrier_wavelength = 0.0107;
    double reflection_amplitude = 0.3; ///< extra amplitude factor of a bounce
};

/// Deterministic first-order geometric path finder.
///
/// Emits a LoS cluster iff tx->rx crosses no blocker, plus one cluster per
/// reflector whose two legs are both clear. Gains are free-space amplitudes
/// relative to the direct distance with a uniform random phase drawn from
/// `seed`; delays are absolute path lengths over c.
std::vector<PathCluster> clusters_from_geometry(const GeometryLinkSpec &link, std::uint64_t seed);

/// Shift all delays so the earliest cluster arrives at t = 0.
std::vector<PathCluster> relative_delays(std::vector<PathCluster> clusters);

} // namespace rissim
