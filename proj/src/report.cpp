#include "horizonsim/report.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

namespace horizonsim {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Completed: return "completed";
        case Verdict::Deadlock: return "deadlock";
        case Verdict::BudgetExhausted: return "budget_exhausted";
    }
    return "?";
}

std::set<ProcessId> detect_deadlock(const RunReport& report) {
    if (report.verdict == Verdict::BudgetExhausted) throw NotQuiescent();
    return report.deadlocked;
}

namespace {

ordered_json group_json(const Group& g) {
    ordered_json a = ordered_json::array();
    for (ProcessId p : g) a.push_back(p);
    return a;
}

std::string human_report(const RunReport& r) {
    std::ostringstream os;
    os << "verdict    : " << to_string(r.verdict) << '\n';
    os << "procs      : " << r.n << "   mode: " << to_string(r.mode) << "   seed: " << r.seed
       << '\n';
    os << "ticks      : " << r.ticks << "   events: " << r.events << '\n';
    if (!r.deadlocked.empty()) {
        os << "deadlocked :";
        for (ProcessId p : r.deadlocked) os << ' ' << p;
        os << '\n';
    }
    os << "messages   : total " << r.messages.total() << '\n';
    os << "  creation          " << r.messages.creation << '\n';
    os << "  lda               " << r.messages.lda << '\n';
    os << "  naive_world_setup " << r.messages.naive_world_setup << '\n';
    os << "  workload          " << r.messages.workload << '\n';
    os << "  revoke_agree      " << r.messages.revoke_agree << '\n';
    os << "creations  : " << r.creations.size() << '\n';
    for (const auto& c : r.creations) {
        os << "  #" << c.cid << " requested " << c.requested.str() << " -> " << c.membership.str()
           << (c.covered ? "  [covered]" : "  [uncovered]") << '\n';
    }
    os << "horizon    :\n";
    for (ProcessId p = 0; p < r.n; ++p) {
        os << "  p" << p << " :";
        for (const auto& g : r.horizon_final[p]) os << ' ' << g.str();
        os << '\n';
    }
    return os.str();
}

}  // namespace

std::string emit_report(const RunReport& r, ReportFormat format) {
    if (format == ReportFormat::Human) return human_report(r);

    ordered_json j;
    j["n"] = r.n;
    j["mode"] = to_string(r.mode);
    j["seed"] = r.seed;
    j["max_events"] = r.max_events;
    j["verdict"] = to_string(r.verdict);
    j["deadlocked"] = ordered_json::array();
    for (ProcessId p : r.deadlocked) j["deadlocked"].push_back(p);
    j["messages"] = {{"creation", r.messages.creation},
                     {"lda", r.messages.lda},
                     {"naive_world_setup", r.messages.naive_world_setup},
                     {"workload", r.messages.workload},
                     {"revoke_agree", r.messages.revoke_agree},
                     {"total", r.messages.total()}};
    j["creations"] = ordered_json::array();
    for (const auto& c : r.creations) {
        j["creations"].push_back({{"requested", group_json(c.requested)},
                                  {"covered", c.covered},
                                  {"membership", group_json(c.membership)},
                                  {"cid", c.cid}});
    }
    j["horizon_final"] = ordered_json::array();
    for (const auto& per_proc : r.horizon_final) {
        ordered_json entries = ordered_json::array();
        for (const auto& g : per_proc) entries.push_back(group_json(g));
        j["horizon_final"].push_back(entries);
    }
    j["ticks"] = r.ticks;
    j["events"] = r.events;
    return j.dump(2) + "\n";
}

}  // namespace horizonsim
