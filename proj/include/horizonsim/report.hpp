#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizonsim/core.hpp"
#include "horizonsim/scenario.hpp"

namespace horizonsim {

enum class Verdict { Completed, Deadlock, BudgetExhausted };

std::string to_string(Verdict v);

// Message counters by role; counts are exact and deterministic, and include
// sends dropped at a crashed receiver.
struct MessageCounts {
    std::uint64_t creation = 0;
    std::uint64_t lda = 0;
    std::uint64_t naive_world_setup = 0;
    std::uint64_t workload = 0;
    std::uint64_t revoke_agree = 0;

    std::uint64_t total() const {
        return creation + lda + naive_world_setup + workload + revoke_agree;
    }
    bool operator==(const MessageCounts&) const = default;
};

// One completed creation collective, in completion order.
struct CreationRecord {
    Group requested;
    bool covered = false;  // a horizon entry covered the group at call time
    Group membership;      // actual members of the resulting communicator
    CommId cid = 0;
    bool operator==(const CreationRecord&) const = default;
};

struct RunReport {
    ProcessId n = 0;
    FtMode mode = FtMode::None;
    std::uint64_t seed = 0;
    std::uint64_t max_events = 0;
    Verdict verdict = Verdict::Completed;
    std::set<ProcessId> deadlocked;  // blocked at quiescence; empty unless Deadlock
    MessageCounts messages;
    std::vector<CreationRecord> creations;
    std::vector<std::vector<Group>> horizon_final;  // per-process entry groups
    std::uint64_t ticks = 0;
    std::uint64_t events = 0;
};

struct NotQuiescent : std::runtime_error {
    NotQuiescent() : std::runtime_error("run exhausted its event budget before quiescence") {}
};

// Processes blocked at quiescence; a nonempty result is the deadlock verdict.
// Budget exhaustion is a distinct outcome, never folded into deadlock.
std::set<ProcessId> detect_deadlock(const RunReport& report);

enum class ReportFormat { Human, Machine };

// Human: aligned text summary. Machine: one JSON document whose field names
// match RunReport; stable key order, byte-identical for identical runs.
std::string emit_report(const RunReport& report, ReportFormat format);

}  // namespace horizonsim
