#include <algorithm>
#include <cassert>

#include "horizonsim/sim.hpp"

namespace horizonsim {

namespace {

bool has_open_session(const ProcessRuntime& p) {
    return std::find(p.sessions.begin(), p.sessions.end(), true) != p.sessions.end();
}

CallKind creation_call_kind(OpKind kind) {
    switch (kind) {
        case OpKind::Create: return CallKind::CommCreate;
        case OpKind::HorizonIntent: return CallKind::HorizonIntent;
        case OpKind::World: return CallKind::WorldInit;
        case OpKind::NaiveWorld: return CallKind::SessionInit;
        default: return CallKind::CommCreate;
    }
}

template <typename State>
State* current_op(ProcessRuntime& p, const CallSite& site) {
    if (p.status != ProcStatus::Blocked || !p.blocked) return nullptr;
    auto* st = std::get_if<State>(&*p.blocked);
    return st && st->site == site ? st : nullptr;
}

}  // namespace

MsgCategory Simulator::creation_category(OpKind kind) const {
    return kind == OpKind::NaiveWorld ? MsgCategory::NaiveWorldSetup : MsgCategory::Creation;
}

void Simulator::run_program(ProcessId pid) {
    auto& p = procs_[pid];
    const Program& prog = plan_.programs[pid];
    while (p.status == ProcStatus::Running) {
        if (p.pc >= prog.size()) {
            p.status = ProcStatus::Finished;
            return;
        }
        bool advanced_inline = execute_call(pid, prog[p.pc]);
        if (p.status != ProcStatus::Running) return;  // blocked (or finished deeper in)
        if (advanced_inline) ++p.pc;
    }
}

bool Simulator::execute_call(ProcessId pid, const Call& call) {
    auto& p = procs_[pid];
    auto local_ok = [&](CallKind kind) {
        CallRecord rec;
        rec.pid = pid;
        rec.kind = kind;
        rec.start = rec.end = tick_;
        record_call(std::move(rec));
    };

    switch (call.kind) {
        case CallKind::SessionInit: {
            p.sessions.push_back(true);
            if (mode_ == FtMode::Naive && !p.naive_world_done) {
                // The naive solution pays for safety up front: the first
                // session init joins a global communicator creation.
                p.naive_world_done = true;
                start_creation(pid, OpKind::NaiveWorld, Group::range(size()));
                return false;
            }
            local_ok(call.kind);
            return true;
        }
        case CallKind::SessionFinalize: {
            auto it = std::find(p.sessions.rbegin(), p.sessions.rend(), true);
            if (it == p.sessions.rend()) {
                record_error(pid, call.kind, "session closed");
                return true;
            }
            *it = false;  // communicators created from the session stay usable
            local_ok(call.kind);
            return true;
        }
        case CallKind::GroupFromPset: {
            if (!has_open_session(p)) {
                record_error(pid, call.kind, "session closed");
                return true;
            }
            try {
                p.current_group = registry_.resolve(call.pset, pid);
            } catch (const UnknownPset& e) {
                record_error(pid, call.kind, e.what());
                return true;
            }
            local_ok(call.kind);
            return true;
        }
        case CallKind::CommCreate:
        case CallKind::HorizonIntent: {
            if (!has_open_session(p)) {
                record_error(pid, call.kind, "session closed");
                return true;
            }
            if (!p.current_group) {
                record_error(pid, call.kind, "no current group");
                return true;
            }
            if (call.kind == CallKind::HorizonIntent && mode_ != FtMode::Horizon) {
                local_ok(call.kind);  // intent declaration belongs to the horizon solution
                return true;
            }
            start_creation(pid,
                           call.kind == CallKind::CommCreate ? OpKind::Create
                                                             : OpKind::HorizonIntent,
                           *p.current_group);
            return false;
        }
        case CallKind::WorldInit: {
            if (p.world_inited) {
                record_error(pid, call.kind, "double init");
                return true;
            }
            p.world_inited = true;
            start_creation(pid, OpKind::World, Group::range(size()));
            return false;
        }
        case CallKind::Barrier:
        case CallKind::Revoke:
        case CallKind::Shrink:
        case CallKind::Agree: {
            if (!p.current_comm || !p.comms.count(*p.current_comm)) {
                record_error(pid, call.kind, "no communicator");
                return true;
            }
            CommId cid = *p.current_comm;
            auto& comm = p.comms[cid];
            if (call.kind == CallKind::Revoke) {
                if (comm.status == CommStatus::Live) {
                    comm.revoke();
                    horizon_evict_traced(pid, cid);
                    for (ProcessId q : comm.group)
                        if (q != pid)
                            send(pid, q, CallSite{}, MsgRevoke{cid}, MsgCategory::RevokeAgree);
                }
                local_ok(call.kind);
                return true;
            }
            if (comm.status != CommStatus::Live) {
                record_error(pid, call.kind, "revoked");
                return true;
            }
            if (call.kind == CallKind::Barrier) {
                start_barrier(pid, cid);
            } else if (call.kind == CallKind::Agree) {
                start_agree(pid, cid, call.bits);
            } else {
                start_shrink(pid, cid);
            }
            return false;
        }
        case CallKind::LdaProbe: {
            Group target;
            try {
                target = registry_.resolve(call.pset, pid);
            } catch (const UnknownPset& e) {
                record_error(pid, call.kind, e.what());
                return true;
            }
            start_lda_probe(pid, target);
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Creation family: create / horizon intent / world init / naive world.

void Simulator::start_creation(ProcessId pid, OpKind kind, const Group& group) {
    auto& p = procs_[pid];
    CreationState st;
    st.kind = kind;
    st.requested = group;
    st.site = make_site(p, kind, 0, group);
    if ((kind == OpKind::Create || kind == OpKind::HorizonIntent) && mode_ != FtMode::None) {
        if (auto entry = p.horizon.covering(group)) {
            st.covered = true;
            st.cover_id = entry->cid;
        }
    }
    trace_.starts.push_back({pid, creation_call_kind(kind), tick_});
    p.status = ProcStatus::Blocked;
    p.blocked_since = tick_;
    p.blocked = std::move(st);
    auto& ref = std::get<CreationState>(*p.blocked);
    if (ref.covered && !known_crashed(pid, group).empty()) {
        creation_enter_lda(pid, ref);
    } else {
        ref.scope = group;
        creation_enter_join(pid, ref);
    }
}

void Simulator::creation_enter_join(ProcessId pid, CreationState& st) {
    st.phase = CreationState::Phase::Join;
    if (st.scope.size() == 1) {
        creation_complete(pid, st, alloc_comm_id(), st.scope, true);
        return;
    }
    if (st.covered && !st.wake_armed && !known_crashed(pid, st.scope).empty())
        arm_watchdog(pid, st);
    CallSite site = st.site;
    if (st.scope.min() != pid)
        send(pid, st.scope.min(), site, MsgCreateJoin{st.scope}, creation_category(st.kind));
    drain_inbox(pid, site);
    if (auto* cur = current_op<CreationState>(procs_[pid], site);
        cur && cur->phase == CreationState::Phase::Join)
        creation_check_join(pid, *cur);
}

void Simulator::creation_enter_lda(ProcessId pid, CreationState& st) {
    st.phase = CreationState::Phase::Lda;
    st.wake_armed = false;
    st.last_contrib_round = Group{};
    CallSite site = st.site;
    drain_inbox(pid, site);
    if (auto* cur = current_op<CreationState>(procs_[pid], site);
        cur && cur->phase == CreationState::Phase::Lda)
        creation_check_lda(pid, *cur);
}

void Simulator::creation_check_lda(ProcessId pid, CreationState& st) {
    Group round = st.requested.minus(known_crashed(pid, st.requested));
    assert(round.contains(pid));
    if (round != st.last_contrib_round) {
        st.last_contrib_round = round;
        st.contribs[round].insert(pid);
        if (round.min() != pid)
            send(pid, round.min(), st.site, MsgLdaContrib{round}, MsgCategory::Lda);
    }
    if (round.min() != pid) return;
    const auto& got = st.contribs[round];
    for (ProcessId q : round)
        if (!got.count(q)) return;
    trace_.verdicts.push_back({st.requested, round, tick_});
    for (ProcessId q : round)
        if (q != pid) send(pid, q, st.site, MsgLdaResult{round}, MsgCategory::Lda);
    creation_apply_verdict(pid, st, round);
}

void Simulator::creation_apply_verdict(ProcessId pid, CreationState& st, const Group& alive) {
    st.scope = alive;
    creation_enter_join(pid, st);
}

void Simulator::creation_check_join(ProcessId pid, CreationState& st) {
    if (st.scope.min() != pid) return;
    auto it = st.joins.find(st.scope);
    for (ProcessId q : st.scope) {
        if (q == pid) continue;
        if (it == st.joins.end() || !it->second.count(q)) return;
    }
    CommId cid = alloc_comm_id();
    for (ProcessId q : st.scope)
        if (q != pid)
            send(pid, q, st.site, MsgCreateCommit{cid, st.scope}, creation_category(st.kind));
    creation_complete(pid, st, cid, st.scope, true);
}

void Simulator::creation_complete(ProcessId pid, CreationState& st, CommId cid,
                                  const Group& membership, bool coordinator) {
    auto& p = procs_[pid];
    OpKind kind = st.kind;
    Group requested = st.requested;
    bool covered = st.covered;

    if (coordinator) creations_.push_back({requested, covered, membership, cid});
    register_comm(pid, Communicator{cid, membership, CommStatus::Live}, true);
    if (kind == OpKind::Create || kind == OpKind::World) p.current_comm = cid;

    CallRecord rec;
    rec.pid = pid;
    rec.kind = creation_call_kind(kind);
    rec.start = p.blocked_since;
    rec.end = tick_;
    rec.cid = cid;
    rec.membership = membership;
    record_call(std::move(rec));
    unblock(pid);
}

void Simulator::creation_on_message(ProcessId pid, CreationState& st, const Message& msg) {
    if (const auto* join = std::get_if<MsgCreateJoin>(&msg.body)) {
        st.joins[join->scope].insert(msg.from);
        if (st.phase == CreationState::Phase::Join) creation_check_join(pid, st);
        return;
    }
    if (const auto* commit = std::get_if<MsgCreateCommit>(&msg.body)) {
        // A commit resolves the call in any phase: if this process retried
        // after a crash while the coordinator still finished the round, the
        // committed communicator is the agreed outcome.
        creation_complete(pid, st, commit->cid, commit->membership, false);
        return;
    }
    if (const auto* contrib = std::get_if<MsgLdaContrib>(&msg.body)) {
        st.contribs[contrib->alive].insert(msg.from);
        if (st.phase == CreationState::Phase::Lda) creation_check_lda(pid, st);
        return;
    }
    if (const auto* result = std::get_if<MsgLdaResult>(&msg.body)) {
        // A verdict naming a member we know to be dead is stale: the crash
        // already reopened the agreement and a fresher round will close.
        Group fresh = st.requested.minus(known_crashed(pid, st.requested));
        if (result->alive != fresh) return;
        if (st.phase == CreationState::Phase::Lda) {
            creation_apply_verdict(pid, st, result->alive);
        } else if (st.scope != result->alive) {
            // A fresh verdict supersedes a join round built on a stale one.
            creation_apply_verdict(pid, st, result->alive);
        }
        return;
    }
}

void Simulator::creation_on_fault_knowledge(ProcessId pid, CreationState& st) {
    if (st.phase == CreationState::Phase::Join) {
        // The join round cannot complete once a scope member died before
        // joining; schedule the retry probe. An in-flight commit still wins.
        if (st.covered && !st.wake_armed && !known_crashed(pid, st.scope).empty())
            arm_watchdog(pid, st);
    } else {
        creation_check_lda(pid, st);
    }
}

void Simulator::arm_watchdog(ProcessId pid, CreationState& st) {
    st.wake_armed = true;
    st.arm_token = ++wake_tokens_;
    Event ev;
    ev.kind = Event::Kind::Wake;
    ev.target = pid;
    ev.wake_token = st.arm_token;
    schedule(std::move(ev), tick_ + opts_.watchdog_factor * st.requested.size());
}

// ---------------------------------------------------------------------------
// Barrier: fixed lowest-rank coordinator, completes only when every member of
// the communicator has entered; a crashed member blocks it until revocation.

void Simulator::start_barrier(ProcessId pid, CommId comm) {
    auto& p = procs_[pid];
    BarrierState st;
    st.comm = comm;
    st.site = make_site(p, OpKind::Barrier, comm, Group{});
    const Group& group = p.comms[comm].group;
    trace_.starts.push_back({pid, CallKind::Barrier, tick_});
    p.status = ProcStatus::Blocked;
    p.blocked_since = tick_;
    p.blocked = std::move(st);
    auto& ref = std::get<BarrierState>(*p.blocked);
    if (group.size() == 1) {
        barrier_check(pid, ref);
        return;
    }
    CallSite site = ref.site;
    if (group.min() == pid) {
        ref.entered.insert(pid);
    } else {
        send(pid, group.min(), site, MsgBarrierEnter{}, MsgCategory::Workload);
    }
    drain_inbox(pid, site);
    if (auto* cur = current_op<BarrierState>(procs_[pid], site)) barrier_check(pid, *cur);
}

void Simulator::barrier_check(ProcessId pid, BarrierState& st) {
    auto& p = procs_[pid];
    const Group& group = p.comms[st.comm].group;
    if (group.size() > 1) {
        if (group.min() != pid) return;
        for (ProcessId q : group)
            if (q != pid && !st.entered.count(q)) return;
        for (ProcessId q : group)
            if (q != pid) send(pid, q, st.site, MsgBarrierRelease{}, MsgCategory::Workload);
    }
    CallRecord rec;
    rec.pid = pid;
    rec.kind = CallKind::Barrier;
    rec.start = p.blocked_since;
    rec.end = tick_;
    rec.cid = st.comm;
    record_call(std::move(rec));
    unblock(pid);
}

void Simulator::barrier_on_message(ProcessId pid, BarrierState& st, const Message& msg) {
    if (std::holds_alternative<MsgBarrierEnter>(msg.body)) {
        st.entered.insert(msg.from);
        barrier_check(pid, st);
        return;
    }
    if (std::holds_alternative<MsgBarrierRelease>(msg.body)) {
        auto& p = procs_[pid];
        CallRecord rec;
        rec.pid = pid;
        rec.kind = CallKind::Barrier;
        rec.start = p.blocked_since;
        rec.end = tick_;
        rec.cid = st.comm;
        record_call(std::move(rec));
        unblock(pid);
    }
}

// ---------------------------------------------------------------------------
// Agree: fault-tolerant AND over the communicator's alive members. The round
// is identified by the participant's alive view, so contributions re-sent
// after new crash knowledge converge on a common final round; the lowest
// alive member closes it and broadcasts the result.

void Simulator::start_agree(ProcessId pid, CommId comm, std::uint64_t bits) {
    auto& p = procs_[pid];
    AgreeState st;
    st.comm = comm;
    st.my_bits = bits;
    st.site = make_site(p, OpKind::Agree, comm, Group{});
    trace_.starts.push_back({pid, CallKind::Agree, tick_});
    p.status = ProcStatus::Blocked;
    p.blocked_since = tick_;
    p.blocked = std::move(st);
    CallSite site = std::get<AgreeState>(*p.blocked).site;
    drain_inbox(pid, site);
    if (auto* cur = current_op<AgreeState>(procs_[pid], site)) agree_sync_round(pid, *cur);
}

void Simulator::agree_sync_round(ProcessId pid, AgreeState& st) {
    auto& p = procs_[pid];
    const Group& group = p.comms[st.comm].group;
    Group round = group.minus(known_crashed(pid, group));
    if (round != st.last_contrib_round) {
        st.last_contrib_round = round;
        st.contribs[round][pid] = st.my_bits;
        if (round.min() != pid)
            send(pid, round.min(), st.site, MsgAgreeContrib{round, st.my_bits},
                 MsgCategory::RevokeAgree);
    }
    agree_check(pid, st);
}

void Simulator::agree_check(ProcessId pid, AgreeState& st) {
    const Group& round = st.last_contrib_round;
    if (round.empty() || round.min() != pid) return;
    auto it = st.contribs.find(round);
    if (it == st.contribs.end()) return;
    for (ProcessId q : round)
        if (!it->second.count(q)) return;
    std::uint64_t result = ~std::uint64_t{0};
    for (ProcessId q : round) result &= it->second.at(q);
    for (ProcessId q : round)
        if (q != pid) send(pid, q, st.site, MsgAgreeResult{result}, MsgCategory::RevokeAgree);
    auto& p = procs_[pid];
    CallRecord rec;
    rec.pid = pid;
    rec.kind = CallKind::Agree;
    rec.start = p.blocked_since;
    rec.end = tick_;
    rec.cid = st.comm;
    rec.membership = round;
    rec.bits = result;
    record_call(std::move(rec));
    unblock(pid);
}

void Simulator::agree_on_message(ProcessId pid, AgreeState& st, const Message& msg) {
    if (const auto* c = std::get_if<MsgAgreeContrib>(&msg.body)) {
        st.contribs[c->round][msg.from] = c->bits;
        agree_check(pid, st);
        return;
    }
    if (const auto* r = std::get_if<MsgAgreeResult>(&msg.body)) {
        auto& p = procs_[pid];
        CallRecord rec;
        rec.pid = pid;
        rec.kind = CallKind::Agree;
        rec.start = p.blocked_since;
        rec.end = tick_;
        rec.cid = st.comm;
        rec.bits = r->bits;
        record_call(std::move(rec));
        unblock(pid);
    }
}

// ---------------------------------------------------------------------------
// Shrink: agree on the alive membership, then commit a fresh communicator
// over exactly that membership.

void Simulator::start_shrink(ProcessId pid, CommId comm) {
    auto& p = procs_[pid];
    ShrinkState st;
    st.comm = comm;
    st.site = make_site(p, OpKind::Shrink, comm, Group{});
    trace_.starts.push_back({pid, CallKind::Shrink, tick_});
    p.status = ProcStatus::Blocked;
    p.blocked_since = tick_;
    p.blocked = std::move(st);
    CallSite site = std::get<ShrinkState>(*p.blocked).site;
    drain_inbox(pid, site);
    if (auto* cur = current_op<ShrinkState>(procs_[pid], site)) shrink_sync_round(pid, *cur);
}

void Simulator::shrink_sync_round(ProcessId pid, ShrinkState& st) {
    auto& p = procs_[pid];
    const Group& group = p.comms[st.comm].group;
    Group round = group.minus(known_crashed(pid, group));
    if (round != st.last_join_round) {
        st.last_join_round = round;
        st.joins[round].insert(pid);
        if (round.min() != pid)
            send(pid, round.min(), st.site, MsgShrinkJoin{round}, MsgCategory::RevokeAgree);
    }
    shrink_check(pid, st);
}

void Simulator::shrink_check(ProcessId pid, ShrinkState& st) {
    const Group& round = st.last_join_round;
    if (round.empty() || round.min() != pid) return;
    auto it = st.joins.find(round);
    if (it == st.joins.end()) return;
    for (ProcessId q : round)
        if (!it->second.count(q)) return;
    CommId cid = alloc_comm_id();
    for (ProcessId q : round)
        if (q != pid)
            send(pid, q, st.site, MsgShrinkCommit{cid, round}, MsgCategory::RevokeAgree);
    auto& p = procs_[pid];
    register_comm(pid, Communicator{cid, round, CommStatus::Live}, false);
    p.current_comm = cid;
    CallRecord rec;
    rec.pid = pid;
    rec.kind = CallKind::Shrink;
    rec.start = p.blocked_since;
    rec.end = tick_;
    rec.cid = cid;
    rec.membership = round;
    record_call(std::move(rec));
    unblock(pid);
}

void Simulator::shrink_on_message(ProcessId pid, ShrinkState& st, const Message& msg) {
    if (const auto* j = std::get_if<MsgShrinkJoin>(&msg.body)) {
        st.joins[j->round].insert(msg.from);
        shrink_check(pid, st);
        return;
    }
    if (const auto* commit = std::get_if<MsgShrinkCommit>(&msg.body)) {
        auto& p = procs_[pid];
        register_comm(pid, Communicator{commit->cid, commit->membership, CommStatus::Live}, false);
        p.current_comm = commit->cid;
        CallRecord rec;
        rec.pid = pid;
        rec.kind = CallKind::Shrink;
        rec.start = p.blocked_since;
        rec.end = tick_;
        rec.cid = commit->cid;
        rec.membership = commit->membership;
        record_call(std::move(rec));
        unblock(pid);
    }
}

// ---------------------------------------------------------------------------
// Standalone liveness discovery, for exercising the agreement on its own.

void Simulator::start_lda_probe(ProcessId pid, const Group& target) {
    auto& p = procs_[pid];
    auto entry = p.horizon.covering(target);
    if (!entry) {
        record_error(pid, CallKind::LdaProbe, "no covering communicator");
        ++p.pc;
        run_program(pid);
        return;
    }
    LdaProbeState st;
    st.target = target;
    st.cover_id = entry->cid;
    st.site = make_site(p, OpKind::LdaProbe, 0, target);
    trace_.starts.push_back({pid, CallKind::LdaProbe, tick_});
    p.status = ProcStatus::Blocked;
    p.blocked_since = tick_;
    p.blocked = std::move(st);
    CallSite site = std::get<LdaProbeState>(*p.blocked).site;
    drain_inbox(pid, site);
    if (auto* cur = current_op<LdaProbeState>(procs_[pid], site)) probe_sync_round(pid, *cur);
}

void Simulator::probe_sync_round(ProcessId pid, LdaProbeState& st) {
    Group round = st.target.minus(known_crashed(pid, st.target));
    if (round != st.last_contrib_round) {
        st.last_contrib_round = round;
        st.contribs[round].insert(pid);
        if (round.min() != pid)
            send(pid, round.min(), st.site, MsgLdaContrib{round}, MsgCategory::Lda);
    }
    probe_check(pid, st);
}

void Simulator::probe_check(ProcessId pid, LdaProbeState& st) {
    const Group& round = st.last_contrib_round;
    if (round.empty() || round.min() != pid) return;
    auto it = st.contribs.find(round);
    if (it == st.contribs.end()) return;
    for (ProcessId q : round)
        if (!it->second.count(q)) return;
    trace_.verdicts.push_back({st.target, round, tick_});
    for (ProcessId q : round)
        if (q != pid) send(pid, q, st.site, MsgLdaResult{round}, MsgCategory::Lda);
    auto& p = procs_[pid];
    CallRecord rec;
    rec.pid = pid;
    rec.kind = CallKind::LdaProbe;
    rec.start = p.blocked_since;
    rec.end = tick_;
    rec.membership = round;
    record_call(std::move(rec));
    unblock(pid);
}

void Simulator::probe_on_message(ProcessId pid, LdaProbeState& st, const Message& msg) {
    if (const auto* contrib = std::get_if<MsgLdaContrib>(&msg.body)) {
        st.contribs[contrib->alive].insert(msg.from);
        probe_check(pid, st);
        return;
    }
    if (const auto* result = std::get_if<MsgLdaResult>(&msg.body)) {
        auto& p = procs_[pid];
        CallRecord rec;
        rec.pid = pid;
        rec.kind = CallKind::LdaProbe;
        rec.start = p.blocked_since;
        rec.end = tick_;
        rec.membership = result->alive;
        record_call(std::move(rec));
        unblock(pid);
    }
}

}  // namespace horizonsim
