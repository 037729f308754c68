// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/access.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

namespace rissim {

namespace {

using nlohmann::json;

enum class Pending { SsbCycle, Prach, Msg2, Msg3, Msg4 };

struct Scheduled {
    double time_ms;
    std::uint64_t seq;
    Pending what;
    long cycle;
};

struct Later {
    bool operator()(const Scheduled &a, const Scheduled &b) const
    {
        if (a.time_ms != b.time_ms)
            return a.time_ms > b.time_ms;
        return a.seq > b.seq;
    }
};

class EventQueue {
public:
    void push(double t, Pending what, long cycle = -1) { q_.push({t, seq_++, what, cycle}); }
    Scheduled pop()
    {
        Scheduled s = q_.top();
        q_.pop();
        return s;
    }
    bool empty() const { return q_.empty(); }

private:
    std::priority_queue<Scheduled, std::vector<Scheduled>, Later> q_;
    std::uint64_t seq_ = 0;
};

bool legal(BsState from, BsState to)
{
    if (to == BsState::Broadcasting)
        return true;
    return (from == BsState::Broadcasting && to == BsState::RarPending) ||
           (from == BsState::RarPending && to == BsState::ContentionResolving) ||
           (from == BsState::ContentionResolving && to == BsState::Connected);
}

bool legal(UeState from, UeState to)
{
    if (to == UeState::Searching)
        return true;
    return static_cast<int>(to) == static_cast<int>(from) + 1;
}

bool legal(RisState from, RisState to)
{
    switch (to) {
    case RisState::Predicting:
        return from == RisState::SyncToBs || from == RisState::Sweeping || from == RisState::Tracking;
    case RisState::Sweeping:
        return from == RisState::Predicting;
    case RisState::Tracking:
        return from == RisState::Sweeping;
    case RisState::SyncToBs:
        return false;
    }
    return false;
}

Actor actor_from(const std::string &s)
{
    for (Actor a : {Actor::Bs, Actor::Ue, Actor::Ris})
        if (s == to_string(a))
            return a;
    throw std::invalid_argument("read_trace: unknown actor '" + s + "'");
}

EventKind kind_from(const std::string &s)
{
    for (int i = 0; i <= static_cast<int>(EventKind::StopDetected); ++i)
        if (s == to_string(static_cast<EventKind>(i)))
            return static_cast<EventKind>(i);
    throw std::invalid_argument("read_trace: unknown event '" + s + "'");
}

json to_json(const TraceEvent &e)
{
    json j;
    j["t_ms"] = e.time_ms;
    j["actor"] = to_string(e.actor);
    j["event"] = to_string(e.kind);
    if (e.beam >= 0)
        j["beam"] = e.beam;
    if (e.has_rsrp)
        j["rsrp_db"] = e.rsrp_db;
    if (!e.cause.empty())
        j["cause"] = e.cause;
    return j;
}

} // namespace

bool is_protocol_message(EventKind kind)
{
    switch (kind) {
    case EventKind::Ssb:
    case EventKind::Msg1:
    case EventKind::Msg2:
    case EventKind::Msg3:
    case EventKind::Msg4:
        return true;
    default:
        return false;
    }
}

const char *to_string(Actor a)
{
    switch (a) {
    case Actor::Bs:
        return "BS";
    case Actor::Ue:
        return "UE";
    case Actor::Ris:
        return "RIS";
    }
    return "?";
}

const char *to_string(EventKind k)
{
    switch (k) {
    case EventKind::Ssb:
        return "SSB";
    case EventKind::Msg1:
        return "Msg1";
    case EventKind::Msg2:
        return "Msg2";
    case EventKind::Msg3:
        return "Msg3";
    case EventKind::Msg4:
        return "Msg4";
    case EventKind::SsbDecoded:
        return "SsbDecoded";
    case EventKind::Connected:
        return "Connected";
    case EventKind::AccessAborted:
        return "AccessAborted";
    case EventKind::BsBeamFixed:
        return "BsBeamFixed";
    case EventKind::CandidatesReady:
        return "CandidatesReady";
    case EventKind::BeamApplied:
        return "BeamApplied";
    case EventKind::ActivitySensed:
        return "ActivitySensed";
    case EventKind::BeamFrozen:
        return "BeamFrozen";
    case EventKind::SweepExhausted:
        return "SweepExhausted";
    case EventKind::StopDetected:
        return "StopDetected";
    }
    return "?";
}

const char *to_string(StopKind k)
{
    switch (k) {
    case StopKind::Blockage:
        return "blockage";
    case StopKind::BsSwitch:
        return "bs_switch";
    case StopKind::SessionEnd:
        return "session_end";
    }
    return "?";
}

void write_trace(std::ostream &os, const ProtocolTrace &trace)
{
    for (const TraceEvent &e : trace.events)
        os << to_json(e).dump() << '\n';
}

ProtocolTrace read_trace(std::istream &is)
{
    ProtocolTrace trace;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const json j = json::parse(line);
        TraceEvent e;
        e.time_ms = j.at("t_ms").get<double>();
        e.actor = actor_from(j.at("actor").get<std::string>());
        e.kind = kind_from(j.at("event").get<std::string>());
        e.beam = j.value("beam", -1L);
        if (j.contains("rsrp_db")) {
            e.has_rsrp = true;
            e.rsrp_db = j.at("rsrp_db").get<double>();
        }
        e.cause = j.value("cause", std::string{});
        trace.events.push_back(std::move(e));
    }
    return trace;
}

std::vector<std::string> diff_traces(const ProtocolTrace &a, const ProtocolTrace &b)
{
    std::vector<std::string> out;
    const std::size_t n = std::max(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < n; ++i) {
        const bool ha = i < a.events.size();
        const bool hb = i < b.events.size();
        if (ha && hb && a.events[i] == b.events[i])
            continue;
        std::ostringstream ss;
        ss << "event " << i << ": " << (ha ? to_json(a.events[i]).dump() : "<none>") << " | "
           << (hb ? to_json(b.events[i]).dump() : "<none>");
        out.push_back(ss.str());
    }
    return out;
}

SweepPolicy SweepPolicy::exhaustive(std::size_t codebook_size, int dwell_cycles)
{
    SweepPolicy p{Kind::Exhaustive, std::vector<std::size_t>(codebook_size), dwell_cycles};
    std::iota(p.beams.begin(), p.beams.end(), std::size_t{0});
    return p;
}

SweepPolicy SweepPolicy::predicted(std::vector<std::size_t> ordered, int dwell_cycles)
{
    return {Kind::PredictedSet, std::move(ordered), dwell_cycles};
}

SweepPolicy SweepPolicy::predicted(const BeamSet &set, int dwell_cycles)
{
    return predicted(std::vector<std::size_t>(set.indices().begin(), set.indices().end()), dwell_cycles);
}

SweepPolicy SweepPolicy::oracle(std::size_t best, int dwell_cycles)
{
    return {Kind::Oracle, {best}, dwell_cycles};
}

void SweepPolicy::validate(std::size_t codebook_size) const
{
    if (beams.empty())
        throw std::invalid_argument("SweepPolicy: empty beam list");
    if (dwell_cycles < 1)
        throw std::invalid_argument("SweepPolicy: dwell_cycles must be >= 1");
    for (std::size_t b : beams)
        if (b >= codebook_size)
            throw std::out_of_range("SweepPolicy: beam " + std::to_string(b) + " outside codebook of size " +
                                    std::to_string(codebook_size));
}

void AccessConfig::validate() const
{
    if (!(ssb_period_ms > 0.0))
        throw std::invalid_argument("AccessConfig: ssb_period_ms must be positive");
    if (!(prach_offset_ms >= 0.0 && prach_offset_ms < ssb_period_ms))
        throw std::invalid_argument("AccessConfig: PRACH offset must fall inside the SSB cycle");
    if (!(msg_latency_ms > 0.0))
        throw std::invalid_argument("AccessConfig: msg_latency_ms must be positive");
    if (!(ssb_miss_prob >= 0.0 && ssb_miss_prob <= 1.0))
        throw std::invalid_argument("AccessConfig: ssb_miss_prob must lie in [0, 1]");
}

double receive_snr_db(const FreqChannel &composite, const ReflectBeam &psi, double snr)
{
    return 10.0 * std::log10(snr * beam_gain(composite, psi));
}

AccessSimulator::AccessSimulator(AccessLink link, SweepPolicy policy, AccessConfig config, std::uint64_t seed)
    : link_(std::move(link)), policy_(std::move(policy)), config_(config), rng_(seed)
{
    config_.validate();
    link_.P.validate();
    link_.Q.validate();
    policy_.validate(link_.Q.size());
    composite_ = composite_channel(link_.h_T, link_.h_R);
    snr_ = link_.budget.snr(composite_.subcarriers());
    p_index_ = decoupled_bs_beam(link_.h_T, link_.P, ReferenceVector::ones(link_.P.elements()));
}

void AccessSimulator::log(Actor a, EventKind k, long beam, std::optional<double> rsrp)
{
    TraceEvent e;
    e.time_ms = now_;
    e.actor = a;
    e.kind = k;
    e.beam = beam;
    if (rsrp) {
        e.has_rsrp = true;
        e.rsrp_db = *rsrp;
    }
    trace_.events.push_back(std::move(e));
}

double AccessSimulator::current_rsrp_db() const
{
    const ReflectBeam psi = link_.P[p_index_] * link_.Q[policy_.beams[cursor_]];
    return receive_snr_db(composite_, psi, snr_);
}

bool AccessSimulator::link_ok() const { return current_rsrp_db() >= config_.detect_threshold_db; }

void AccessSimulator::set_bs(BsState to)
{
    if (!legal(bs_, to))
        throw ProtocolError("illegal BS transition");
    bs_ = to;
}

void AccessSimulator::set_ue(UeState to)
{
    if (!legal(ue_, to))
        throw ProtocolError("illegal UE transition");
    ue_ = to;
}

void AccessSimulator::set_ris(RisState to)
{
    if (!legal(ris_, to))
        throw ProtocolError("illegal RIS transition");
    ris_ = to;
}

AccessOutcome AccessSimulator::run()
{
    if (ris_ != RisState::SyncToBs && ris_ != RisState::Predicting)
        throw ProtocolError("run: RIS is not ready to start a session");

    const double T = config_.ssb_period_ms;
    const double session_start = now_;
    const long first_cycle = static_cast<long>(std::ceil(now_ / T));

    // Step 0: BS-side beam; step 1: candidate list.
    if (ris_ == RisState::SyncToBs) {
        log(Actor::Ris, EventKind::BsBeamFixed, static_cast<long>(p_index_));
        set_ris(RisState::Predicting);
    }
    log(Actor::Ris, EventKind::CandidatesReady);
    set_ris(RisState::Sweeping);

    // Step 2: sweep, switching only on SSB cycle boundaries.
    cursor_ = 0;
    long applied_cycle = first_cycle;
    bool access_active = false;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto beam = [&] { return static_cast<long>(policy_.beams[cursor_]); };
    auto abort_access = [&] {
        log(Actor::Ue, EventKind::AccessAborted);
        set_ue(UeState::Searching);
        set_bs(BsState::Broadcasting);
        access_active = false;
    };

    EventQueue queue;
    now_ = static_cast<double>(first_cycle) * T;
    log(Actor::Ris, EventKind::BeamApplied, beam());
    queue.push(now_, Pending::SsbCycle, first_cycle);

    AccessOutcome out;
    while (!queue.empty()) {
        const Scheduled ev = queue.pop();
        now_ = ev.time_ms;
        switch (ev.what) {
        case Pending::SsbCycle: {
            if (ev.cycle - applied_cycle >= policy_.dwell_cycles && !access_active) {
                if (cursor_ + 1 >= policy_.beams.size()) {
                    log(Actor::Ris, EventKind::SweepExhausted);
                    set_ris(RisState::Predicting);
                    out.beams_tried = policy_.beams.size();
                    out.training_time_ms = static_cast<double>(out.beams_tried) * policy_.dwell_cycles * T;
                    return out;
                }
                ++cursor_;
                applied_cycle = ev.cycle;
                log(Actor::Ris, EventKind::BeamApplied, beam());
            }
            log(Actor::Bs, EventKind::Ssb);
            if (ue_ == UeState::Searching) {
                const bool missed = unit(rng_) < config_.ssb_miss_prob;
                const double rsrp = current_rsrp_db();
                if (rsrp >= config_.detect_threshold_db && !missed) {
                    set_ue(UeState::SsbDecoded);
                    log(Actor::Ue, EventKind::SsbDecoded, beam(), rsrp);
                    queue.push(now_ + config_.prach_offset_ms, Pending::Prach);
                }
            }
            queue.push(static_cast<double>(ev.cycle + 1) * T, Pending::SsbCycle, ev.cycle + 1);
            break;
        }
        case Pending::Prach:
            log(Actor::Ue, EventKind::Msg1);
            set_ue(UeState::PreambleSent);
            if (!link_ok()) {
                abort_access();
                break;
            }
            set_bs(BsState::RarPending);
            access_active = true;
            log(Actor::Ris, EventKind::ActivitySensed, beam());
            queue.push(now_ + config_.msg_latency_ms, Pending::Msg2);
            break;
        case Pending::Msg2:
            log(Actor::Bs, EventKind::Msg2);
            log(Actor::Ris, EventKind::ActivitySensed, beam());
            if (!link_ok()) {
                abort_access();
                break;
            }
            set_ue(UeState::RarReceived);
            queue.push(now_ + config_.msg_latency_ms, Pending::Msg3);
            break;
        case Pending::Msg3:
            log(Actor::Ue, EventKind::Msg3);
            set_ue(UeState::Msg3Sent);
            log(Actor::Ris, EventKind::ActivitySensed, beam());
            if (!link_ok()) {
                abort_access();
                break;
            }
            set_bs(BsState::ContentionResolving);
            queue.push(now_ + config_.msg_latency_ms, Pending::Msg4);
            break;
        case Pending::Msg4:
            log(Actor::Bs, EventKind::Msg4);
            log(Actor::Ris, EventKind::ActivitySensed, beam());
            if (!link_ok()) {
                abort_access();
                break;
            }
            set_ue(UeState::Connected);
            set_bs(BsState::Connected);
            log(Actor::Ue, EventKind::Connected, beam());
            // Step 3: freeze the winning beam and hand over to tracking.
            log(Actor::Ris, EventKind::BeamFrozen, beam());
            set_ris(RisState::Tracking);
            out.success = true;
            out.beam = beam();
            out.t_access_ms = now_ - session_start;
            out.beams_tried = cursor_ + 1;
            out.training_time_ms = static_cast<double>(out.beams_tried) * policy_.dwell_cycles * T;
            return out;
        }
    }
    return out; // unreachable: the SSB cycle keeps the queue non-empty
}

void AccessSimulator::inject_stop(StopKind kind, double at_ms)
{
    if (ris_ != RisState::Tracking)
        throw ProtocolError(std::string("inject_stop: ") + to_string(kind) + " outside Tracking is not allowed");
    if (at_ms < now_)
        throw ProtocolError("inject_stop: stop time lies before the current simulation time");
    now_ = at_ms;
    TraceEvent e;
    e.time_ms = now_;
    e.actor = Actor::Ris;
    e.kind = EventKind::StopDetected;
    e.cause = to_string(kind);
    trace_.events.push_back(std::move(e));
    set_ris(RisState::Predicting);
    set_ue(UeState::Searching);
    set_bs(BsState::Broadcasting);
}

AccessResult run_initial_access(AccessLink link, SweepPolicy policy, AccessConfig config, std::uint64_t seed)
{
    AccessSimulator sim(std::move(link), std::move(policy), config, seed);
    AccessResult res;
    res.outcome = sim.run();
    res.trace = sim.trace();
    return res;
}

OverheadSummary overhead_report(std::span<const AccessOutcome> outcomes, std::size_t codebook_size)
{
    if (outcomes.empty())
        throw std::invalid_argument("overhead_report: no outcomes");
    OverheadSummary s;
    s.runs = outcomes.size();
    double beams = 0.0;
    double t_access = 0.0;
    double training = 0.0;
    for (const AccessOutcome &o : outcomes) {
        if (!o.success) {
            ++s.failures;
            continue;
        }
        ++s.successes;
        beams += static_cast<double>(o.beams_tried);
        t_access += o.t_access_ms;
        training += o.training_time_ms;
    }
    if (s.successes > 0) {
        const double n = static_cast<double>(s.successes);
        s.mean_beams_tried = beams / n;
        s.mean_t_access_ms = t_access / n;
        s.mean_training_time_ms = training / n;
        s.reduction_factor = static_cast<double>(codebook_size) / s.mean_beams_tried;
    }
    return s;
}

bool check_causality(const ProtocolTrace &trace)
{
    int stage = 0; // last message of the ongoing exchange
    double last_t = -std::numeric_limits<double>::infinity();
    for (const TraceEvent &e : trace.events) {
        int msg = 0;
        switch (e.kind) {
        case EventKind::Msg1:
            msg = 1;
            break;
        case EventKind::Msg2:
            msg = 2;
            break;
        case EventKind::Msg3:
            msg = 3;
            break;
        case EventKind::Msg4:
            msg = 4;
            break;
        case EventKind::AccessAborted:
            stage = 0;
            continue;
        case EventKind::Connected:
            if (stage != 4)
                return false;
            stage = 0;
            continue;
        default:
            continue;
        }
        if (msg != stage + 1)
            return false;
        if (msg > 1 && !(e.time_ms > last_t))
            return false;
        stage = msg;
        last_t = e.time_ms;
    }
    return true;
}

std::size_t ris_message_count(const ProtocolTrace &trace)
{
    return static_cast<std::size_t>(std::count_if(trace.events.begin(), trace.events.end(), [](const TraceEvent &e) {
        return e.actor == Actor::Ris && is_protocol_message(e.kind);
    }));
}

bool check_dwell(const ProtocolTrace &trace, const AccessConfig &config, int dwell_cycles)
{
    const double T = config.ssb_period_ms;
    const double hold = dwell_cycles * T;
    std::optional<double> last_switch;
    for (const TraceEvent &e : trace.events) {
        if (e.actor != Actor::Ris)
            continue;
        switch (e.kind) {
        case EventKind::BeamApplied: {
            const double cycles = e.time_ms / T;
            if (std::abs(cycles - std::round(cycles)) > 1e-9)
                return false;
            if (last_switch && e.time_ms - *last_switch < hold - 1e-9)
                return false;
            last_switch = e.time_ms;
            break;
        }
        case EventKind::SweepExhausted:
            if (last_switch && e.time_ms - *last_switch < hold - 1e-9)
                return false;
            last_switch.reset();
            break;
        case EventKind::StopDetected:
        case EventKind::BeamFrozen:
            last_switch.reset();
            break;
        default:
            break;
        }
    }
    return true;
}

} // namespace rissim
