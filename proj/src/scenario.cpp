#include "horizonsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace horizonsim {

std::string to_string(FtMode mode) {
    switch (mode) {
        case FtMode::None: return "none";
        case FtMode::Naive: return "naive";
        case FtMode::Horizon: return "horizon";
    }
    return "none";
}

FtMode ft_mode_from_string(const std::string& s) {
    if (s == "none") return FtMode::None;
    if (s == "naive") return FtMode::Naive;
    if (s == "horizon") return FtMode::Horizon;
    throw InvalidScenario("unknown mode: " + s);
}

PsetRegistry ScenarioPlan::registry() const {
    PsetRegistry reg(n);
    for (const auto& [name, g] : psets) reg.bind(name, g);
    return reg;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::uint64_t parse_u64(const std::string& s, int line, const char* what) {
    std::uint64_t v = 0;
    auto sv = trim(s);
    auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || p != sv.data() + sv.size())
        throw ParseError(line, std::string("expected ") + what + ", got '" + sv + "'");
    return v;
}

// "0-3,7" -> {0,1,2,3,7}; duplicates are rejected.
Group parse_id_list(const std::string& s, int line) {
    std::vector<ProcessId> ids;
    for (const auto& part : split(s, ',')) {
        auto p = trim(part);
        if (p.empty()) throw ParseError(line, "empty id in list");
        auto dash = p.find('-');
        if (dash == std::string::npos) {
            ids.push_back(static_cast<ProcessId>(parse_u64(p, line, "process id")));
        } else {
            auto lo = parse_u64(p.substr(0, dash), line, "range start");
            auto hi = parse_u64(p.substr(dash + 1), line, "range end");
            if (hi < lo) throw ParseError(line, "descending range '" + p + "'");
            for (auto i = lo; i <= hi; ++i) ids.push_back(static_cast<ProcessId>(i));
        }
    }
    std::vector<ProcessId> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ParseError(line, "duplicate process id in list");
    return Group(std::move(ids));
}

Call parse_call(const std::string& text, int line) {
    auto t = trim(text);
    auto sp = t.find(' ');
    std::string head = sp == std::string::npos ? t : t.substr(0, sp);
    std::string arg = sp == std::string::npos ? "" : trim(t.substr(sp + 1));

    auto no_arg = [&](CallKind k) {
        if (!arg.empty()) throw ParseError(line, "'" + head + "' takes no argument");
        return Call{k, "", 0};
    };
    if (head == "sinit") return no_arg(CallKind::SessionInit);
    if (head == "fin") return no_arg(CallKind::SessionFinalize);
    if (head == "create") return no_arg(CallKind::CommCreate);
    if (head == "horizon") return no_arg(CallKind::HorizonIntent);
    if (head == "barrier") return no_arg(CallKind::Barrier);
    if (head == "revoke") return no_arg(CallKind::Revoke);
    if (head == "shrink") return no_arg(CallKind::Shrink);
    if (head == "winit") return no_arg(CallKind::WorldInit);
    if (head == "gset") {
        if (arg.empty()) throw ParseError(line, "gset needs a pset name");
        return Call{CallKind::GroupFromPset, arg, 0};
    }
    if (head == "agree") {
        if (arg != "0" && arg != "1") throw ParseError(line, "agree needs 0 or 1");
        return Call{CallKind::Agree, "", arg == "1" ? 1u : 0u};
    }
    throw ParseError(line, "unknown call '" + head + "'");
}

// Static walk of one program: tracks the current group through gset so that
// creation calls can be checked for caller membership, and requires a
// communicator-producing call before comm-scoped operations.
void check_program(ProcessId pid, const Program& prog, const PsetRegistry& reg, ProcessId n) {
    std::optional<Group> cur_group;
    bool has_comm = false;
    for (const auto& call : prog) {
        switch (call.kind) {
            case CallKind::GroupFromPset: {
                if (!reg.has(call.pset))
                    throw InvalidScenario("process " + std::to_string(pid) +
                                          ": undefined pset '" + call.pset + "'");
                cur_group = reg.resolve(call.pset, pid);
                break;
            }
            case CallKind::CommCreate:
            case CallKind::HorizonIntent: {
                if (!cur_group)
                    throw InvalidScenario("process " + std::to_string(pid) +
                                          ": creation call before any gset");
                if (!cur_group->contains(pid))
                    throw InvalidScenario("process " + std::to_string(pid) +
                                          ": not a member of its creation group " +
                                          cur_group->str());
                if (call.kind == CallKind::CommCreate) has_comm = true;
                break;
            }
            case CallKind::WorldInit:
                has_comm = true;
                break;
            case CallKind::Barrier:
            case CallKind::Revoke:
            case CallKind::Shrink:
            case CallKind::Agree:
                if (!has_comm)
                    throw InvalidScenario("process " + std::to_string(pid) +
                                          ": comm operation before any communicator exists");
                break;
            case CallKind::LdaProbe:
                break;
            default:
                break;
        }
        (void)n;
    }
}

}  // namespace

ScenarioPlan parse_scenario(const std::string& text) {
    ScenarioPlan plan;
    bool have_procs = false;
    std::set<ProcessId> crashed;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;

    while (std::getline(in, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        std::istringstream ls(line);
        std::string directive;
        ls >> directive;

        if (directive == "procs") {
            if (have_procs) throw ParseError(lineno, "duplicate procs directive");
            std::string rest;
            std::getline(ls, rest);
            auto v = parse_u64(rest, lineno, "process count");
            if (v == 0) throw ParseError(lineno, "procs must be at least 1");
            plan.n = static_cast<ProcessId>(v);
            plan.programs.assign(plan.n, {});
            have_procs = true;
            continue;
        }
        if (!have_procs) throw ParseError(lineno, "procs must come first");

        if (directive == "mode") {
            std::string m;
            ls >> m;
            try {
                plan.mode = ft_mode_from_string(m);
            } catch (const InvalidScenario& e) {
                throw ParseError(lineno, e.what());
            }
        } else if (directive == "pset") {
            std::string name, ids;
            ls >> name;
            std::getline(ls, ids);
            if (name.empty() || trim(ids).empty())
                throw ParseError(lineno, "pset needs a name and an id list");
            if (name == PsetRegistry::kWorld || name == PsetRegistry::kSelf)
                throw ParseError(lineno, "'" + name + "' is builtin");
            if (plan.psets.count(name)) throw ParseError(lineno, "pset '" + name + "' redefined");
            Group g = parse_id_list(trim(ids), lineno);
            for (ProcessId p : g)
                if (p >= plan.n) throw ParseError(lineno, "pset member out of range");
            plan.psets[name] = std::move(g);
        } else if (directive == "crash") {
            std::string pid_s, at, tick_s;
            ls >> pid_s >> at >> tick_s;
            if (at != "@") throw ParseError(lineno, "expected 'crash <pid> @ <tick>'");
            auto pid = static_cast<ProcessId>(parse_u64(pid_s, lineno, "process id"));
            auto tick = parse_u64(tick_s, lineno, "tick");
            if (pid >= plan.n) throw ParseError(lineno, "crash pid out of range");
            if (!crashed.insert(pid).second)
                throw ParseError(lineno, "process " + pid_s + " crashes twice");
            plan.faults.push_back({pid, tick});
        } else if (directive == "prog") {
            auto colon = line.find(':');
            if (colon == std::string::npos) throw ParseError(lineno, "prog needs ':'");
            std::string who = trim(line.substr(4, colon - 4));
            std::string body = line.substr(colon + 1);
            Program prog;
            for (const auto& part : split(body, ';')) {
                if (trim(part).empty()) continue;
                prog.push_back(parse_call(part, lineno));
            }
            if (who == "*") {
                for (auto& p : plan.programs) p = prog;
            } else {
                auto pid = static_cast<ProcessId>(parse_u64(who, lineno, "process id"));
                if (pid >= plan.n) throw ParseError(lineno, "prog pid out of range");
                plan.programs[pid] = std::move(prog);
            }
        } else {
            throw ParseError(lineno, "unknown directive '" + directive + "'");
        }
    }
    if (!have_procs) throw ParseError(lineno == 0 ? 1 : lineno, "missing procs directive");

    auto reg = plan.registry();
    for (ProcessId pid = 0; pid < plan.n; ++pid) check_program(pid, plan.programs[pid], reg, plan.n);
    return plan;
}

namespace {

std::string call_text(const Call& c) {
    switch (c.kind) {
        case CallKind::SessionInit: return "sinit";
        case CallKind::SessionFinalize: return "fin";
        case CallKind::GroupFromPset: return "gset " + c.pset;
        case CallKind::CommCreate: return "create";
        case CallKind::HorizonIntent: return "horizon";
        case CallKind::Barrier: return "barrier";
        case CallKind::Revoke: return "revoke";
        case CallKind::Shrink: return "shrink";
        case CallKind::Agree: return c.bits ? "agree 1" : "agree 0";
        case CallKind::WorldInit: return "winit";
        case CallKind::LdaProbe: return "ldaprobe " + c.pset;  // not parseable; debug only
    }
    return "?";
}

std::string id_list_text(const Group& g) {
    // Collapse runs into ranges for readable fixtures.
    std::ostringstream os;
    const auto& m = g.members();
    for (std::size_t i = 0; i < m.size();) {
        std::size_t j = i;
        while (j + 1 < m.size() && m[j + 1] == m[j] + 1) ++j;
        if (os.tellp() > 0) os << ',';
        if (j > i + 1)
            os << m[i] << '-' << m[j];
        else if (j == i + 1)
            os << m[i] << ',' << m[j];
        else
            os << m[i];
        i = j + 1;
    }
    return os.str();
}

}  // namespace

std::string serialize_scenario(const ScenarioPlan& plan) {
    std::ostringstream os;
    os << "procs " << plan.n << '\n';
    os << "mode " << to_string(plan.mode) << '\n';
    for (const auto& [name, g] : plan.psets) os << "pset " << name << ' ' << id_list_text(g) << '\n';
    for (const auto& f : plan.faults) os << "crash " << f.pid << " @ " << f.tick << '\n';
    for (ProcessId pid = 0; pid < plan.n; ++pid) {
        const auto& prog = plan.programs[pid];
        if (prog.empty()) continue;
        os << "prog " << pid << " : ";
        for (std::size_t i = 0; i < prog.size(); ++i) {
            if (i) os << "; ";
            os << call_text(prog[i]);
        }
        os << '\n';
    }
    return os.str();
}

ScenarioPlan gen_ep_like(ProcessId n, ProcessId groups_of) {
    if (n == 0 || groups_of == 0 || n % groups_of != 0)
        throw InvalidScenario("group size must divide the process count");
    ScenarioPlan plan;
    plan.n = n;
    plan.programs.assign(n, {});
    for (ProcessId base = 0; base < n; base += groups_of) {
        std::vector<ProcessId> ids(groups_of);
        std::iota(ids.begin(), ids.end(), base);
        std::string name = "app://ep" + std::to_string(base / groups_of);
        plan.psets[name] = Group(std::move(ids));
        Program prog{{CallKind::SessionInit}, {CallKind::GroupFromPset, name},
                     {CallKind::HorizonIntent}, {CallKind::CommCreate},
                     {CallKind::Barrier},       {CallKind::SessionFinalize}};
        for (ProcessId p = base; p < base + groups_of; ++p) plan.programs[p] = prog;
    }
    return plan;
}

ScenarioPlan gen_dt_like(ProcessId n) {
    if (n < 4) throw InvalidScenario("data-traffic pattern needs at least 4 processes");
    ScenarioPlan plan;
    plan.n = n;
    plan.programs.assign(n, {});

    auto pair_name = [](ProcessId i) { return "app://pair" + std::to_string(i); };
    for (ProcessId i = 0; i + 1 < n; ++i) plan.psets[pair_name(i)] = Group{i, i + 1};
    std::vector<ProcessId> half(n / 2);
    std::iota(half.begin(), half.end(), 0);
    plan.psets["app://gather"] = Group(std::move(half));

    for (ProcessId p = 0; p < n; ++p) plan.programs[p].push_back({CallKind::SessionInit});
    // Stage 1: even pairs {0,1},{2,3},...  Stage 2: odd pairs {1,2},{3,4},...
    for (int stage = 0; stage < 2; ++stage) {
        for (ProcessId i = static_cast<ProcessId>(stage); i + 1 < n; i += 2) {
            for (ProcessId p : {i, static_cast<ProcessId>(i + 1)}) {
                plan.programs[p].push_back({CallKind::GroupFromPset, pair_name(i)});
                plan.programs[p].push_back({CallKind::CommCreate});
                plan.programs[p].push_back({CallKind::Barrier});
            }
        }
    }
    for (ProcessId p = 0; p < n / 2; ++p) {
        plan.programs[p].push_back({CallKind::GroupFromPset, "app://gather"});
        plan.programs[p].push_back({CallKind::CommCreate});
        plan.programs[p].push_back({CallKind::Barrier});
    }
    for (ProcessId p = 0; p < n; ++p) plan.programs[p].push_back({CallKind::SessionFinalize});
    return plan;
}

}  // namespace horizonsim
