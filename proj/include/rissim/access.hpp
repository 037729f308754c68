// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------
//
// Discrete-event replay of 5G NR initial access through a transparent RIS.
//
// Timeline (one session):
//   - the RIS fixes its BS-side beam p* and obtains a candidate list of
//     UE-side beams from its sweep policy;
//   - at every SSB cycle boundary the RIS may switch to the next candidate,
//     after holding the current one for dwell_cycles cycles;
//   - the BS broadcasts an SSB at every cycle start; the UE decodes it iff the
//     mean receive SNR through psi = p* (.) q clears the detection threshold;
//   - a decoded SSB triggers Msg1 at the cycle's PRACH occasion, followed by
//     Msg2, Msg3 and Msg4 at fixed latencies;
//   - the RIS only senses band activity. When it senses the Msg4 burst it
//     freezes the current beam and enters tracking.
//
// The RIS never originates protocol messages.

#pragma once

#include "rissim/beams.hpp"
#include "rissim/channel.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rissim {

enum class BsState { Broadcasting, RarPending, ContentionResolving, Connected };
enum class UeState { Searching, SsbDecoded, PreambleSent, RarReceived, Msg3Sent, Connected };
enum class RisState { SyncToBs, Predicting, Sweeping, Tracking };

enum class Actor { Bs, Ue, Ris };

enum class EventKind {
    // Over-the-air protocol messages.
    Ssb,
    Msg1,
    Msg2,
    Msg3,
    Msg4,
    // Endpoint-local events.
    SsbDecoded,
    Connected,
    AccessAborted,
    // RIS-local events; none of these is transmitted.
    BsBeamFixed,
    CandidatesReady,
    BeamApplied,
    ActivitySensed,
    BeamFrozen,
    SweepExhausted,
    StopDetected,
};

bool is_protocol_message(EventKind kind);
const char *to_string(Actor a);
const char *to_string(EventKind k);

enum class StopKind { Blockage, BsSwitch, SessionEnd };
const char *to_string(StopKind k);

struct TraceEvent {
    double time_ms = 0.0;
    Actor actor = Actor::Bs;
    EventKind kind = EventKind::Ssb;
    long beam = -1;      ///< codebook index, -1 if not applicable
    double rsrp_db = 0.0; ///< only meaningful when has_rsrp
    bool has_rsrp = false;
    std::string cause;   ///< stop cause for StopDetected

    friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
};

struct ProtocolTrace {
    std::vector<TraceEvent> events;
};

/// One JSON object per line, keys sorted.
void write_trace(std::ostream &os, const ProtocolTrace &trace);
ProtocolTrace read_trace(std::istream &is);

/// Human-readable list of event-by-event differences; empty when identical.
std::vector<std::string> diff_traces(const ProtocolTrace &a, const ProtocolTrace &b);

struct SweepPolicy {
    enum class Kind { Exhaustive, PredictedSet, Oracle };
    Kind kind = Kind::Exhaustive;
    std::vector<std::size_t> beams; ///< sweep order
    int dwell_cycles = 2;

    static SweepPolicy exhaustive(std::size_t codebook_size, int dwell_cycles = 2);
    /// Sweeps the candidates in the given order (e.g. by descending score).
    static SweepPolicy predicted(std::vector<std::size_t> ordered, int dwell_cycles = 2);
    static SweepPolicy predicted(const BeamSet &set, int dwell_cycles = 2);
    static SweepPolicy oracle(std::size_t best, int dwell_cycles = 2);

    /// Throws on an empty list, dwell < 1, or beams outside the codebook.
    void validate(std::size_t codebook_size) const;
};

struct AccessConfig {
    double ssb_period_ms = 20.0;
    double prach_offset_ms = 5.0;
    double msg_latency_ms = 2.0;
    double detect_threshold_db = -6.0;
    double ssb_miss_prob = 0.0; ///< independent per-occasion decode failure

    void validate() const;
};

struct AccessOutcome {
    bool success = false;
    long beam = -1;
    double t_access_ms = 0.0;    ///< session start to UE Connected
    std::size_t beams_tried = 0;
    double training_time_ms = 0.0; ///< beams_tried * dwell_cycles * ssb_period_ms
};

struct AccessResult {
    ProtocolTrace trace;
    AccessOutcome outcome;
};

/// The channels and codebooks one simulation runs against.
struct AccessLink {
    FreqChannel h_T;
    FreqChannel h_R;
    PhaseCodebook P;
    PhaseCodebook Q;
    LinkBudget budget;
};

/// Mean receive SNR in dB through psi = p (.) q.
double receive_snr_db(const FreqChannel &composite, const ReflectBeam &psi, double snr);

/// Raised on illegal state transitions and misplaced stop events.
struct ProtocolError : std::logic_error {
    using std::logic_error::logic_error;
};

class AccessSimulator {
public:
    AccessSimulator(AccessLink link, SweepPolicy policy, AccessConfig config, std::uint64_t seed);

    /// Runs one session from the current time until the UE connects or the
    /// sweep is exhausted. Requires the RIS to be in SyncToBs or Predicting.
    AccessOutcome run();

    /// Ends the tracked session at `at_ms` (Tracking -> Predicting). Throws
    /// ProtocolError unless the RIS is tracking and at_ms is not in the past.
    void inject_stop(StopKind kind, double at_ms);

    const ProtocolTrace &trace() const { return trace_; }
    double now_ms() const { return now_; }
    BsState bs_state() const { return bs_; }
    UeState ue_state() const { return ue_; }
    RisState ris_state() const { return ris_; }
    std::size_t bs_beam() const { return p_index_; }

private:
    void log(Actor a, EventKind k, long beam = -1, std::optional<double> rsrp = std::nullopt);
    double current_rsrp_db() const;
    bool link_ok() const;
    void set_bs(BsState to);
    void set_ue(UeState to);
    void set_ris(RisState to);

    AccessLink link_;
    SweepPolicy policy_;
    AccessConfig config_;
    FreqChannel composite_;
    std::size_t p_index_ = 0;
    double snr_ = 0.0;
    std::mt19937_64 rng_;

    ProtocolTrace trace_;
    double now_ = 0.0;
    BsState bs_ = BsState::Broadcasting;
    UeState ue_ = UeState::Searching;
    RisState ris_ = RisState::SyncToBs;
    std::size_t cursor_ = 0;
};

AccessResult run_initial_access(AccessLink link, SweepPolicy policy, AccessConfig config, std::uint64_t seed);

struct OverheadSummary {
    std::size_t runs = 0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    double mean_beams_tried = 0.0;  ///< over successful runs
    double mean_t_access_ms = 0.0;  ///< over successful runs
    double mean_training_time_ms = 0.0;
    double reduction_factor = 0.0;  ///< |Q| / mean_beams_tried
};

/// Requires at least one outcome.
OverheadSummary overhead_report(std::span<const AccessOutcome> outcomes, std::size_t codebook_size);

/// Msg1 -> Msg2 -> Msg3 -> Msg4 with strictly increasing times, and every
/// Connected preceded by a Msg4 of the same exchange.
bool check_causality(const ProtocolTrace &trace);
/// Number of protocol messages originated by the RIS.
std::size_t ris_message_count(const ProtocolTrace &trace);
/// Beam switches sit on SSB cycle boundaries and each beam is held at
/// least dwell_cycles cycles before the next switch.
bool check_dwell(const ProtocolTrace &trace, const AccessConfig &config, int dwell_cycles);

} // namespace rissim
