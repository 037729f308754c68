// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// RIS reflection codebooks and beam selection.
//
// The RIS reflection vector is psi = p (.) q, the element-wise product of a
// BS-side factor p from codebook P and a UE-side factor q from codebook Q.
// The joint problem picks (p, q) maximizing the wideband achievable rate; the
// decoupled problem aligns each side independently against a reference
// vector a:
//
//     p* = argmax_p (1/K) sum_k |(h_T,k (.) p)^H conj(a)|^2
//     q* = argmax_q (1/K) sum_k |(h_R,k (.) q)^H a|^2
//
// which only needs one side's channel at a time. Every search breaks ties
// toward the smallest index.

#pragma once

#include "rissim/channel.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rissim {

/// Phase-only reflection vector; entries are exp(j * phase_m).
class ReflectBeam {
public:
    ReflectBeam() = default;
    /// Phases are wrapped into [-pi, pi).
    explicit ReflectBeam(std::vector<double> phases);

    std::size_t size() const { return phases_.size(); }
    std::span<const double> phases() const { return phases_; }
    cplx element(std::size_t m) const;
    CVector to_vector() const;

    /// Element-wise product (p (.) q): phases add.
    friend ReflectBeam operator*(const ReflectBeam &a, const ReflectBeam &b);
    friend bool operator==(const ReflectBeam &, const ReflectBeam &) = default;

private:
    std::vector<double> phases_;
};

/// Wrap an angle into [-pi, pi).
double wrap_phase(double phase);
/// Nearest of the 2^bits uniform levels, returned in [-pi, pi).
double quantize_phase(double phase, int bits);

enum class CodebookKind { DftUpa, QuantizedAll, Custom };

struct PhaseCodebook {
    std::vector<ReflectBeam> beams;
    int phase_bits = 0; ///< 0 means unquantized
    CodebookKind kind = CodebookKind::Custom;

    std::size_t size() const { return beams.size(); }
    std::size_t elements() const { return beams.empty() ? 0 : beams.front().size(); }
    const ReflectBeam &operator[](std::size_t j) const { return beams[j]; }

    /// Throws if empty or if beam lengths disagree.
    void validate() const;
};

struct DftCodebookSpec {
    int oversample_az = 1;
    int oversample_el = 1;
    int phase_bits = 3; ///< 0 keeps full-resolution phases
};

/// DFT grid over (u, v) = (cos el sin az, sin el), rows * os_el by
/// cols * os_az beams, spacing 1 / (spacing * N * os) in each direction.
/// Beam (iv, iu) sits at index iv * (cols * os_az) + iu and is the conjugate
/// of the array response toward its grid point.
PhaseCodebook make_dft_codebook(const ArrayGeometry &geom, const DftCodebookSpec &spec = {});

/// Every beam with phases on the 2^bits grid; index digit m (base 2^bits) is
/// the level of element m. Only practical for bits * M <= 20.
PhaseCodebook make_quantized_all_codebook(std::size_t elements, int bits);

void write_codebook(std::ostream &os, const PhaseCodebook &cb);
PhaseCodebook read_codebook(std::istream &is);
/// SHA-256 hex digest of the text export; pins the exact codebook used by a dataset.
std::string codebook_hash(const PhaseCodebook &cb);

/// Sorted set of codebook indices.
class BeamSet {
public:
    BeamSet() = default;
    explicit BeamSet(std::vector<std::size_t> indices);

    void insert(std::size_t index);
    bool contains(std::size_t index) const;
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    std::span<const std::size_t> indices() const { return indices_; }

    /// Throws std::out_of_range if any index is >= codebook_size.
    void validate(std::size_t codebook_size) const;

    friend bool operator==(const BeamSet &, const BeamSet &) = default;

private:
    std::vector<std::size_t> indices_;
};

/// Unit-modulus reference vector a of the decoupled problem.
class ReferenceVector {
public:
    explicit ReferenceVector(CVector entries);
    static ReferenceVector ones(std::size_t elements);

    std::size_t size() const { return entries_.size(); }
    std::span<const cplx> entries() const { return entries_; }

private:
    CVector entries_;
};

/// Composite channel g_k = h_R,k (.) h_T,k; the received amplitude on
/// subcarrier k is g_k^T psi.
FreqChannel composite_channel(const FreqChannel &h_T, const FreqChannel &h_R);

/// Per-subcarrier mean of |g_k^T psi|^2.
double beam_gain(const FreqChannel &composite, const ReflectBeam &psi);

/// (1/K) sum_k log2(1 + SNR |(h_R,k (.) h_T,k)^T psi|^2), SNR = p_t / (K sigma^2).
double achievable_rate(const FreqChannel &h_T, const FreqChannel &h_R, const ReflectBeam &psi,
                       const LinkBudget &budget);
double achievable_rate(const FreqChannel &composite, const ReflectBeam &psi, double snr);

struct JointSelection {
    std::size_t p_index = 0;
    std::size_t q_index = 0;
    double rate = 0.0;
};

/// Exhaustive argmax of the rate over P x Q with psi = p (.) q.
JointSelection joint_beam_search(const FreqChannel &h_T, const FreqChannel &h_R, const PhaseCodebook &P,
                                 const PhaseCodebook &Q, const LinkBudget &budget);

/// Objective of the BS-side decoupled problem for one beam.
double bs_alignment(const FreqChannel &h_T, const ReflectBeam &p, const ReferenceVector &ref);
/// Objective of the UE-side decoupled problem for one beam.
double ue_alignment(const FreqChannel &h_R, const ReflectBeam &q, const ReferenceVector &ref);

std::size_t decoupled_bs_beam(const FreqChannel &h_T, const PhaseCodebook &P, const ReferenceVector &ref);
std::size_t decoupled_ue_beam(const FreqChannel &h_R, const PhaseCodebook &Q, const ReferenceVector &ref);

/// Union of the per-UE decoupled beams.
BeamSet optimal_beam_set(std::span<const FreqChannel> ue_channels, const PhaseCodebook &Q,
                         const ReferenceVector &ref);

/// Rate with a distinct phase-conjugate beam on every subcarrier; an upper
/// bound on any single-beam rate.
double equal_gain_rate(const FreqChannel &h_T, const FreqChannel &h_R, const LinkBudget &budget);
double equal_gain_rate(const FreqChannel &composite, double snr);

/// Phases on the 2^bits grid maximizing |sum_m c_m exp(j lambda_m)|.
///
/// Exact: at the optimum every element sits on the level nearest to the phase
/// of the resulting sum, so sweeping that phase across the M * 2^bits points
/// where some element changes its nearest level visits every candidate.
/// Runs in O(M^2 2^bits).
std::vector<double> best_quantized_alignment(std::span<const cplx> coefficients, int bits);

struct LosGapResult {
    double gap = 0.0;           ///< 1 - decoupled / joint
    double decoupled_rate = 0.0;
    double joint_rate = 0.0;
    ReflectBeam decoupled_beam; ///< p* (.) q*
    ReflectBeam joint_beam;     ///< psi*
};

/// Gap between the decoupled solution and the joint optimum over the full
/// 2^bits phase set for LoS-only (frequency-flat) channels, with a = all-ones.
/// Rejects channels that vary across subcarriers.
LosGapResult los_optimality_gap(const FreqChannel &h_T, const FreqChannel &h_R, int phase_bits,
                                const LinkBudget &budget = {});

} // namespace rissim
