#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizonsim/core.hpp"

namespace horizonsim {

// Fault management mode for a whole run: none leaves communicator creation
// unguarded, naive builds a global communicator at first session init, and
// horizon routes covered creations through liveness discovery.
enum class FtMode { None, Naive, Horizon };

std::string to_string(FtMode mode);
FtMode ft_mode_from_string(const std::string& s);

enum class CallKind {
    SessionInit,     // sinit
    SessionFinalize, // fin
    GroupFromPset,   // gset <pset>
    CommCreate,      // create
    HorizonIntent,   // horizon
    Barrier,         // barrier
    Revoke,          // revoke
    Shrink,          // shrink
    Agree,           // agree <0|1>
    WorldInit,       // winit
    LdaProbe,        // not part of the file grammar; built programmatically in tests
};

struct Call {
    CallKind kind;
    std::string pset;        // GroupFromPset, LdaProbe
    std::uint64_t bits = 0;  // Agree contribution
    bool operator==(const Call&) const = default;
};

using Program = std::vector<Call>;

struct CrashDirective {
    ProcessId pid;
    std::uint64_t tick;
    bool operator==(const CrashDirective&) const = default;
};

// At most one crash-stop directive per process.
using FaultPlan = std::vector<CrashDirective>;

struct ParseError : std::runtime_error {
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};

struct InvalidScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A parsed scenario: process count, pset bindings, fault plan and one program
// per process. The mode is a default; the CLI can override it per run.
struct ScenarioPlan {
    ProcessId n = 0;
    FtMode mode = FtMode::None;
    std::map<std::string, Group> psets;
    FaultPlan faults;
    std::vector<Program> programs;

    PsetRegistry registry() const;
    bool operator==(const ScenarioPlan&) const = default;
};

// Line-oriented scenario text: one directive per line, '#' starts a comment.
//   procs <n>
//   mode none|naive|horizon          (optional)
//   pset <name> <ids>                e.g. "pset app://half 0-3,7"
//   crash <pid> @ <tick>
//   prog <pid|*> : <call>{; <call>}
// Calls: sinit fin gset <pset> create horizon barrier revoke shrink
//        agree <0|1> winit
// Throws ParseError with a line number on syntax problems and InvalidScenario
// on semantic ones (undefined pset, caller outside its creation group, ...).
ScenarioPlan parse_scenario(const std::string& text);

// Canonical text form; parse_scenario(serialize_scenario(p)) == p.
std::string serialize_scenario(const ScenarioPlan& plan);

// Embarrassingly-parallel workload: n/groups_of disjoint groups, each declaring
// intent, creating one communicator and running one barrier. Per-process work
// does not depend on n.
ScenarioPlan gen_ep_like(ProcessId n, ProcessId groups_of);

// Data-traffic workload: overlapping neighbor pairs in two stages plus a
// gather group over the first half, several creations per process.
ScenarioPlan gen_dt_like(ProcessId n);

}  // namespace horizonsim
