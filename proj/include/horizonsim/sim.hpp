#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "horizonsim/core.hpp"
#include "horizonsim/horizon.hpp"
#include "horizonsim/lda.hpp"
#include "horizonsim/report.hpp"
#include "horizonsim/scenario.hpp"

namespace horizonsim {

enum class MsgCategory { Creation, Lda, NaiveWorldSetup, Workload, RevokeAgree };

// Collective operations a process can block in.
enum class OpKind { Create, HorizonIntent, World, NaiveWorld, Barrier, Agree, Shrink, LdaProbe };

// Identifies matching call instances across processes: creation-family calls
// pair up by requested group, comm-scoped calls by communicator, both with a
// per-process ordinal counting earlier calls of the same identity.
struct CallSite {
    OpKind op = OpKind::Create;
    CommId comm = 0;
    Group group;
    std::uint32_t ordinal = 0;
    auto operator<=>(const CallSite&) const = default;
};

struct MsgCreateJoin { Group scope; };
struct MsgCreateCommit { CommId cid; Group membership; };
struct MsgLdaContrib { Group alive; };  // sender's round view; doubles as round id
struct MsgLdaResult { Group alive; };
struct MsgBarrierEnter {};
struct MsgBarrierRelease {};
struct MsgAgreeContrib { Group round; std::uint64_t bits; };
struct MsgAgreeResult { std::uint64_t bits; };
struct MsgShrinkJoin { Group round; };
struct MsgShrinkCommit { CommId cid; Group membership; };
struct MsgRevoke { CommId cid; };

using MsgBody = std::variant<MsgCreateJoin, MsgCreateCommit, MsgLdaContrib, MsgLdaResult,
                             MsgBarrierEnter, MsgBarrierRelease, MsgAgreeContrib, MsgAgreeResult,
                             MsgShrinkJoin, MsgShrinkCommit, MsgRevoke>;

struct Message {
    ProcessId from = 0;
    ProcessId to = 0;
    CallSite site;
    MsgBody body;
    MsgCategory category = MsgCategory::Creation;
};

// Events are dispatched in (at, seq) order; seq is the insertion sequence, so
// same-tick events run in scheduling order and per-pair delivery is FIFO.
struct Event {
    enum class Kind { Deliver, Crash, Wake };
    Tick at = 0;
    std::uint64_t seq = 0;
    Kind kind = Kind::Wake;
    ProcessId target = 0;           // Crash / Wake
    std::uint64_t wake_token = 0;   // 0 starts the program; watchdog tokens are nonzero
    Message msg;                    // Deliver
};

enum class ProcStatus { Running, Blocked, Crashed, Finished };

// Creation-family collective. The unprotected path is a fixed-coordinator
// join/commit exchange that stalls if any member never joins. The protected
// path (a horizon entry covers the group) survives crashes: participants that
// know of a crashed member agree on the alive subset first, and a stalled
// join round is abandoned via a watchdog wake once a member of its scope is
// known to have crashed.
struct CreationState {
    CallSite site;
    OpKind kind = OpKind::Create;
    Group requested;
    bool covered = false;
    CommId cover_id = 0;
    enum class Phase { Lda, Join } phase = Phase::Join;
    Group scope;  // Join: the attempt's target group; Lda: unused
    bool wake_armed = false;
    std::uint64_t arm_token = 0;
    Group last_contrib_round;                    // dedupes re-sends within one round
    std::map<Group, std::set<ProcessId>> joins;  // received joins keyed by scope tag
    std::map<Group, std::set<ProcessId>> contribs;
};

struct BarrierState {
    CallSite site;
    CommId comm = 0;
    std::set<ProcessId> entered;
};

struct AgreeState {
    CallSite site;
    CommId comm = 0;
    std::uint64_t my_bits = 0;
    Group last_contrib_round;
    std::map<Group, std::map<ProcessId, std::uint64_t>> contribs;
};

struct ShrinkState {
    CallSite site;
    CommId comm = 0;
    Group last_join_round;
    std::map<Group, std::set<ProcessId>> joins;
};

struct LdaProbeState {
    CallSite site;
    Group target;
    CommId cover_id = 0;
    Group last_contrib_round;
    std::map<Group, std::set<ProcessId>> contribs;
};

using BlockedOp =
    std::variant<CreationState, BarrierState, AgreeState, ShrinkState, LdaProbeState>;

struct ProcessRuntime {
    ProcessId pid = 0;
    ProcStatus status = ProcStatus::Running;
    std::size_t pc = 0;
    std::vector<bool> sessions;  // open flags in creation order
    std::optional<Group> current_group;
    std::optional<CommId> current_comm;
    std::map<CommId, Communicator> comms;  // local view; status may lag peers
    std::set<CommId> pending_revokes;      // revoke notices that beat the commit
    HorizonSet horizon;
    bool world_inited = false;
    bool naive_world_done = false;
    std::optional<BlockedOp> blocked;
    Tick blocked_since = 0;
    std::map<CallSite, std::deque<Message>> inbox;  // messages for other call sites
    std::map<std::tuple<OpKind, CommId, Group>, std::uint32_t> site_ordinals;
};

// Per-call completion record kept for tests and diagnostics.
struct CallRecord {
    ProcessId pid = 0;
    CallKind kind = CallKind::SessionInit;
    Tick start = 0;
    Tick end = 0;
    bool ok = true;
    std::string error;
    CommId cid = 0;
    Group membership;
    std::uint64_t bits = 0;
};

struct HorizonEvent {
    Tick tick = 0;
    ProcessId pid = 0;
    bool inserted = true;
    CommId cid = 0;
    Group group;
};

struct CallStart {
    ProcessId pid = 0;
    CallKind kind = CallKind::SessionInit;
    Tick tick = 0;
};

struct RunTrace {
    std::vector<CallRecord> calls;       // completions only
    std::vector<CallStart> starts;       // every blocking call that began
    std::vector<LivenessVerdict> verdicts;
    std::vector<HorizonEvent> horizon_events;
    std::map<ProcessId, Tick> crashes;   // dispatch tick of each effective crash
};

// Deterministic discrete-event engine: unit-latency reliable FIFO messaging,
// crash-stop faults, and exact deadlock detection at quiescence. One instance
// is single-threaded; independent instances may run in parallel.
class Simulator {
public:
    struct Options {
        std::uint64_t watchdog_factor = 10;  // stalled-creation wake after factor*|group| ticks
    };

    Simulator(ScenarioPlan plan, FtMode mode, std::uint64_t seed, Options opts);
    Simulator(ScenarioPlan plan, FtMode mode, std::uint64_t seed = 0);

    enum class StepOutcome { Progressed, Quiescent };

    StepOutcome step();
    RunReport run(std::uint64_t max_events);

    // True iff target crashed and the observer shares a live communicator
    // with it; outside such a communicator a fault is indistinguishable from
    // a delay.
    bool failure_known(ProcessId observer, ProcessId target) const;

    void send(ProcessId from, ProcessId to, CallSite site, MsgBody body, MsgCategory category);

    Tick now() const { return tick_; }
    std::uint64_t events_dispatched() const { return events_; }
    ProcStatus status(ProcessId pid) const { return procs_[pid].status; }
    const ProcessRuntime& process(ProcessId pid) const { return procs_[pid]; }
    const RunTrace& trace() const { return trace_; }
    const MessageCounts& message_counts() const { return counts_; }
    ProcessId size() const { return static_cast<ProcessId>(procs_.size()); }
    FtMode mode() const { return mode_; }

    // No process is silently runnable outside an event dispatch.
    bool quiescence_sound() const;

private:
    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const {
            return a.at != b.at ? a.at < b.at : a.seq < b.seq;
        }
    };

    void schedule(Event ev, Tick at);
    void dispatch(const Event& ev);
    void on_crash(ProcessId pid);
    void on_wake(ProcessId pid, std::uint64_t token);
    void on_deliver(const Message& msg);
    void on_revoke_notice(ProcessId pid, CommId cid);

    // program interpreter
    void run_program(ProcessId pid);
    bool execute_call(ProcessId pid, const Call& call);  // true if completed inline
    CallSite make_site(ProcessRuntime& p, OpKind op, CommId comm, const Group& group);

    // collective machinery (collectives.cpp)
    void start_creation(ProcessId pid, OpKind kind, const Group& group);
    void start_barrier(ProcessId pid, CommId comm);
    void start_agree(ProcessId pid, CommId comm, std::uint64_t bits);
    void start_shrink(ProcessId pid, CommId comm);
    void start_lda_probe(ProcessId pid, const Group& target);
    void creation_enter_join(ProcessId pid, CreationState& st);
    void creation_enter_lda(ProcessId pid, CreationState& st);
    void creation_check_join(ProcessId pid, CreationState& st);
    void creation_check_lda(ProcessId pid, CreationState& st);
    void creation_apply_verdict(ProcessId pid, CreationState& st, const Group& alive);
    void creation_complete(ProcessId pid, CreationState& st, CommId cid, const Group& membership,
                           bool coordinator);
    void creation_on_message(ProcessId pid, CreationState& st, const Message& msg);
    void creation_on_fault_knowledge(ProcessId pid, CreationState& st);
    void arm_watchdog(ProcessId pid, CreationState& st);
    void barrier_check(ProcessId pid, BarrierState& st);
    void barrier_on_message(ProcessId pid, BarrierState& st, const Message& msg);
    void agree_sync_round(ProcessId pid, AgreeState& st);
    void agree_check(ProcessId pid, AgreeState& st);
    void agree_on_message(ProcessId pid, AgreeState& st, const Message& msg);
    void shrink_sync_round(ProcessId pid, ShrinkState& st);
    void shrink_check(ProcessId pid, ShrinkState& st);
    void shrink_on_message(ProcessId pid, ShrinkState& st, const Message& msg);
    void probe_sync_round(ProcessId pid, LdaProbeState& st);
    void probe_check(ProcessId pid, LdaProbeState& st);
    void probe_on_message(ProcessId pid, LdaProbeState& st, const Message& msg);
    void on_fault_knowledge(ProcessId pid);
    void blocked_message(ProcessId pid, const Message& msg);

    // shared helpers
    Group known_crashed(ProcessId observer, const Group& universe) const;
    bool shares_live_comm(ProcessId a, ProcessId b) const;
    void register_comm(ProcessId pid, const Communicator& c, bool into_horizon);
    void horizon_evict_traced(ProcessId pid, CommId cid);
    void drain_inbox(ProcessId pid, const CallSite& site);
    void unblock(ProcessId pid);
    void record_error(ProcessId pid, CallKind kind, const std::string& what);
    void record_call(CallRecord rec);
    CommId alloc_comm_id() { return next_cid_++; }
    MsgCategory creation_category(OpKind kind) const;

    ScenarioPlan plan_;
    FtMode mode_;
    std::uint64_t seed_;
    Options opts_;
    PsetRegistry registry_;
    std::vector<ProcessRuntime> procs_;
    std::set<Event, EventOrder> queue_;
    Tick tick_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t events_ = 0;
    std::uint64_t wake_tokens_ = 0;
    CommId next_cid_ = 1;
    MessageCounts counts_;
    std::vector<CreationRecord> creations_;
    RunTrace trace_;
};

// Builds a simulator for the plan and runs it to quiescence or budget.
RunReport run_scenario(const ScenarioPlan& plan, FtMode mode, std::uint64_t seed,
                       std::uint64_t max_events);

}  // namespace horizonsim
