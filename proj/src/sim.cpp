#include "horizonsim/sim.hpp"

#include <algorithm>
#include <cassert>

namespace horizonsim {

Simulator::Simulator(ScenarioPlan plan, FtMode mode, std::uint64_t seed)
    : Simulator(std::move(plan), mode, seed, Options{}) {}

Simulator::Simulator(ScenarioPlan plan, FtMode mode, std::uint64_t seed, Options opts)
    : plan_(std::move(plan)), mode_(mode), seed_(seed), opts_(opts), registry_(plan_.registry()) {
    if (plan_.n == 0) throw InvalidScenario("scenario needs at least one process");
    if (plan_.programs.size() != plan_.n)
        throw InvalidScenario("program table does not match the process count");

    procs_.resize(plan_.n);
    for (ProcessId p = 0; p < plan_.n; ++p) procs_[p].pid = p;

    std::set<ProcessId> seen;
    auto faults = plan_.faults;
    std::sort(faults.begin(), faults.end(), [](const CrashDirective& a, const CrashDirective& b) {
        return a.tick != b.tick ? a.tick < b.tick : a.pid < b.pid;
    });
    for (const auto& f : faults) {
        if (f.pid >= plan_.n) throw InvalidScenario("crash directive targets an unknown process");
        if (!seen.insert(f.pid).second)
            throw InvalidScenario("process crashes more than once");
        Event ev;
        ev.kind = Event::Kind::Crash;
        ev.target = f.pid;
        schedule(ev, f.tick);
    }
    for (ProcessId p = 0; p < plan_.n; ++p) {
        Event ev;
        ev.kind = Event::Kind::Wake;
        ev.target = p;
        ev.wake_token = 0;
        schedule(ev, 0);
    }
}

void Simulator::schedule(Event ev, Tick at) {
    ev.at = at;
    ev.seq = seq_++;
    queue_.insert(std::move(ev));
}

void Simulator::send(ProcessId from, ProcessId to, CallSite site, MsgBody body,
                     MsgCategory category) {
    switch (category) {
        case MsgCategory::Creation: ++counts_.creation; break;
        case MsgCategory::Lda: ++counts_.lda; break;
        case MsgCategory::NaiveWorldSetup: ++counts_.naive_world_setup; break;
        case MsgCategory::Workload: ++counts_.workload; break;
        case MsgCategory::RevokeAgree: ++counts_.revoke_agree; break;
    }
    if (procs_[to].status == ProcStatus::Crashed) return;  // dropped, still counted
    Event ev;
    ev.kind = Event::Kind::Deliver;
    ev.msg = Message{from, to, std::move(site), std::move(body), category};
    schedule(std::move(ev), tick_ + 1);
}

Simulator::StepOutcome Simulator::step() {
    if (queue_.empty()) {
        assert(quiescence_sound());
        return StepOutcome::Quiescent;
    }
    Event ev = *queue_.begin();
    queue_.erase(queue_.begin());
    tick_ = std::max(tick_ + 1, ev.at);
    ++events_;
    dispatch(ev);
    return StepOutcome::Progressed;
}

void Simulator::dispatch(const Event& ev) {
    switch (ev.kind) {
        case Event::Kind::Crash: on_crash(ev.target); break;
        case Event::Kind::Wake: on_wake(ev.target, ev.wake_token); break;
        case Event::Kind::Deliver:
            if (procs_[ev.msg.to].status != ProcStatus::Crashed) on_deliver(ev.msg);
            break;
    }
}

void Simulator::on_crash(ProcessId pid) {
    auto& p = procs_[pid];
    if (p.status == ProcStatus::Finished || p.status == ProcStatus::Crashed) return;
    p.status = ProcStatus::Crashed;
    p.blocked.reset();
    trace_.crashes[pid] = tick_;
    // Crash knowledge may complete collections or trigger retries elsewhere.
    for (ProcessId q = 0; q < size(); ++q)
        if (procs_[q].status == ProcStatus::Blocked) on_fault_knowledge(q);
}

void Simulator::on_wake(ProcessId pid, std::uint64_t token) {
    auto& p = procs_[pid];
    if (token == 0) {
        if (p.status == ProcStatus::Running) run_program(pid);
        return;
    }
    if (p.status != ProcStatus::Blocked || !p.blocked) return;
    auto* st = std::get_if<CreationState>(&*p.blocked);
    if (!st || !st->wake_armed || st->arm_token != token) return;
    st->wake_armed = false;
    // A member of the current attempt died; abandon the join round and agree
    // on the alive subset. Without a covering entry there is no retry path.
    if (!st->covered || st->phase != CreationState::Phase::Join) return;
    if (known_crashed(pid, st->scope).empty()) return;
    creation_enter_lda(pid, *st);
}

void Simulator::on_deliver(const Message& msg) {
    auto& p = procs_[msg.to];
    if (auto* rv = std::get_if<MsgRevoke>(&msg.body)) {
        on_revoke_notice(msg.to, rv->cid);
        return;
    }
    if (p.status == ProcStatus::Blocked && p.blocked) {
        bool matches = std::visit([&](const auto& op) { return op.site == msg.site; }, *p.blocked);
        if (matches) {
            blocked_message(msg.to, msg);
            return;
        }
    }
    p.inbox[msg.site].push_back(msg);
}

void Simulator::blocked_message(ProcessId pid, const Message& msg) {
    auto& p = procs_[pid];
    if (auto* cr = std::get_if<CreationState>(&*p.blocked)) return creation_on_message(pid, *cr, msg);
    if (auto* ba = std::get_if<BarrierState>(&*p.blocked)) return barrier_on_message(pid, *ba, msg);
    if (auto* ag = std::get_if<AgreeState>(&*p.blocked)) return agree_on_message(pid, *ag, msg);
    if (auto* sh = std::get_if<ShrinkState>(&*p.blocked)) return shrink_on_message(pid, *sh, msg);
    if (auto* pr = std::get_if<LdaProbeState>(&*p.blocked)) return probe_on_message(pid, *pr, msg);
}

void Simulator::drain_inbox(ProcessId pid, const CallSite& site) {
    auto& p = procs_[pid];
    auto it = p.inbox.find(site);
    if (it == p.inbox.end()) return;
    while (!it->second.empty()) {
        if (p.status != ProcStatus::Blocked || !p.blocked) break;
        bool still = std::visit([&](const auto& op) { return op.site == site; }, *p.blocked);
        if (!still) break;
        Message msg = it->second.front();
        it->second.pop_front();
        blocked_message(pid, msg);
        it = p.inbox.find(site);  // handlers may mutate the inbox
        if (it == p.inbox.end()) return;
    }
}

void Simulator::on_fault_knowledge(ProcessId pid) {
    auto& p = procs_[pid];
    if (!p.blocked) return;
    if (auto* cr = std::get_if<CreationState>(&*p.blocked)) return creation_on_fault_knowledge(pid, *cr);
    if (auto* ag = std::get_if<AgreeState>(&*p.blocked)) {
        agree_sync_round(pid, *ag);
        return;
    }
    if (auto* sh = std::get_if<ShrinkState>(&*p.blocked)) {
        shrink_sync_round(pid, *sh);
        return;
    }
    if (auto* pr = std::get_if<LdaProbeState>(&*p.blocked)) {
        probe_sync_round(pid, *pr);
        return;
    }
    // Barriers stall on a crashed member until their communicator is revoked.
}

bool Simulator::failure_known(ProcessId observer, ProcessId target) const {
    if (observer == target) return false;
    if (procs_[target].status != ProcStatus::Crashed) return false;
    return shares_live_comm(observer, target);
}

bool Simulator::shares_live_comm(ProcessId a, ProcessId b) const {
    for (const auto& [cid, comm] : procs_[a].comms) {
        if (comm.status != CommStatus::Live) continue;
        if (comm.group.contains(a) && comm.group.contains(b)) return true;
    }
    return false;
}

Group Simulator::known_crashed(ProcessId observer, const Group& universe) const {
    std::vector<ProcessId> out;
    for (ProcessId p : universe)
        if (failure_known(observer, p)) out.push_back(p);
    return Group(std::move(out));
}

bool Simulator::quiescence_sound() const {
    return std::none_of(procs_.begin(), procs_.end(),
                        [](const ProcessRuntime& p) { return p.status == ProcStatus::Running; });
}

void Simulator::register_comm(ProcessId pid, const Communicator& c, bool into_horizon) {
    auto& p = procs_[pid];
    Communicator local = c;
    bool revoked_early = p.pending_revokes.erase(c.cid) > 0;
    if (revoked_early) local.status = CommStatus::Revoked;
    p.comms[c.cid] = local;
    if (into_horizon && local.status == CommStatus::Live) {
        p.horizon.insert(local);
        trace_.horizon_events.push_back({tick_, pid, true, local.cid, local.group});
    }
}

void Simulator::horizon_evict_traced(ProcessId pid, CommId cid) {
    auto& p = procs_[pid];
    for (const auto& e : p.horizon.entries()) {
        if (e.cid == cid) {
            trace_.horizon_events.push_back({tick_, pid, false, cid, e.group});
            break;
        }
    }
    p.horizon.evict(cid);
}

void Simulator::on_revoke_notice(ProcessId pid, CommId cid) {
    auto& p = procs_[pid];
    auto it = p.comms.find(cid);
    if (it == p.comms.end()) {
        p.pending_revokes.insert(cid);  // commit may still be in flight
        return;
    }
    if (it->second.status != CommStatus::Live) return;
    it->second.revoke();
    horizon_evict_traced(pid, cid);

    if (!p.blocked) return;
    bool on_this_comm = false;
    CallKind kind = CallKind::Barrier;
    if (auto* ba = std::get_if<BarrierState>(&*p.blocked)) {
        on_this_comm = ba->comm == cid;
        kind = CallKind::Barrier;
    } else if (auto* ag = std::get_if<AgreeState>(&*p.blocked)) {
        on_this_comm = ag->comm == cid;
        kind = CallKind::Agree;
    } else if (auto* sh = std::get_if<ShrinkState>(&*p.blocked)) {
        on_this_comm = sh->comm == cid;
        kind = CallKind::Shrink;
    } else if (auto* pr = std::get_if<LdaProbeState>(&*p.blocked)) {
        on_this_comm = pr->cover_id == cid;
        kind = CallKind::LdaProbe;
    } else if (auto* cr = std::get_if<CreationState>(&*p.blocked)) {
        if (cr->covered && cr->cover_id == cid) {
            // The covering entry is gone; fall back to another entry or to the
            // unprotected path.
            auto entry = p.horizon.covering(cr->requested);
            if (entry) {
                cr->cover_id = entry->cid;
            } else {
                cr->covered = false;
                if (cr->phase == CreationState::Phase::Lda) {
                    cr->phase = CreationState::Phase::Join;
                    cr->scope = cr->requested;
                    creation_enter_join(pid, *cr);
                }
            }
        }
        return;
    }
    if (on_this_comm) {
        record_error(pid, kind, "revoked");
        unblock(pid);
    }
}

void Simulator::unblock(ProcessId pid) {
    auto& p = procs_[pid];
    p.blocked.reset();
    p.status = ProcStatus::Running;
    ++p.pc;
    run_program(pid);
}

void Simulator::record_error(ProcessId pid, CallKind kind, const std::string& what) {
    CallRecord rec;
    rec.pid = pid;
    rec.kind = kind;
    rec.start = procs_[pid].status == ProcStatus::Blocked ? procs_[pid].blocked_since : tick_;
    rec.end = tick_;
    rec.ok = false;
    rec.error = what;
    trace_.calls.push_back(std::move(rec));
}

void Simulator::record_call(CallRecord rec) { trace_.calls.push_back(std::move(rec)); }

CallSite Simulator::make_site(ProcessRuntime& p, OpKind op, CommId comm, const Group& group) {
    auto key = std::make_tuple(op, comm, group);
    std::uint32_t ordinal = p.site_ordinals[key]++;
    return CallSite{op, comm, group, ordinal};
}

RunReport Simulator::run(std::uint64_t max_events) {
    if (max_events == 0) throw InvalidScenario("event budget must be positive");
    bool quiescent = false;
    while (events_ < max_events) {
        if (step() == StepOutcome::Quiescent) {
            quiescent = true;
            break;
        }
    }
    RunReport rep;
    rep.n = plan_.n;
    rep.mode = mode_;
    rep.seed = seed_;
    rep.max_events = max_events;
    if (!quiescent && queue_.empty() && quiescence_sound()) quiescent = true;
    if (!quiescent) {
        rep.verdict = Verdict::BudgetExhausted;
    } else {
        for (const auto& p : procs_)
            if (p.status == ProcStatus::Blocked) rep.deadlocked.insert(p.pid);
        rep.verdict = rep.deadlocked.empty() ? Verdict::Completed : Verdict::Deadlock;
    }
    rep.messages = counts_;
    rep.creations = creations_;
    rep.horizon_final.reserve(procs_.size());
    for (const auto& p : procs_) rep.horizon_final.push_back(p.horizon.entry_groups());
    rep.ticks = tick_;
    rep.events = events_;
    return rep;
}

RunReport run_scenario(const ScenarioPlan& plan, FtMode mode, std::uint64_t seed,
                       std::uint64_t max_events) {
    Simulator sim(plan, mode, seed);
    return sim.run(max_events);
}

}  // namespace horizonsim
