#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <random>

#include "horizonsim/horizon.hpp"
#include "horizonsim/report.hpp"
#include "horizonsim/scenario.hpp"
#include "horizonsim/sim.hpp"
#include "support/oracles.hpp"

using namespace horizonsim;
namespace t = horizonsim::testing;
using nlohmann::json;

namespace {

void gate(const std::string& name, bool ok) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << std::endl;
    CHECK_MESSAGE(ok, name);
}

Communicator live(CommId cid, Group g) { return Communicator{cid, std::move(g), CommStatus::Live}; }

std::set<Group> entry_set(const HorizonSet& h) {
    auto v = h.entry_groups();
    return {v.begin(), v.end()};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Exhaustive walk over insert sequences: every node of the tree of sequences
// up to `depth` drawn from `pool` is checked against the brute-force oracle.
void walk_sequences(const HorizonSet& h, std::vector<Group>& history, int depth,
                    const std::vector<Group>& pool, CommId next, long& mismatches) {
    if (depth == 0) return;
    for (const auto& g : pool) {
        HorizonSet h2 = h;
        h2.insert(live(next, g));
        history.push_back(g);
        if (entry_set(h2) != t::oracle_minimal(history) || !t::is_antichain(h2.entry_groups()))
            ++mismatches;
        walk_sequences(h2, history, depth - 1, pool, next + 1, mismatches);
        history.pop_back();
    }
}

}  // namespace

TEST_CASE("minimal horizon matches the brute-force oracle") {
    auto start = std::chrono::steady_clock::now();
    long mismatches = 0;

    std::vector<Group> pool;  // every non-empty subset of a 5-process world
    for (std::uint32_t mask = 1; mask < 32; ++mask) pool.push_back(t::group_from_mask(mask));
    std::vector<Group> history;
    walk_sequences(HorizonSet{}, history, 4, pool, 1, mismatches);

    std::mt19937_64 rng(1234);
    for (int run = 0; run < 1000; ++run) {
        HorizonSet h;
        std::vector<Group> hist;
        CommId cid = 1;
        for (int i = 0; i < 20; ++i) {
            Group g = t::random_group(rng, 12);
            hist.push_back(g);
            h.insert(live(cid++, g));
            if (entry_set(h) != t::oracle_minimal(hist) || !t::is_antichain(h.entry_groups()))
                ++mismatches;
        }
    }

    double elapsed = seconds_since(start);
    CHECK(mismatches == 0);
    CHECK(elapsed < 10.0);
    gate("horizon minimality: exhaustive 5-process sequences and 1000 random 12-process "
         "sequences match the oracle in " +
             std::to_string(elapsed).substr(0, 4) + "s",
         mismatches == 0 && elapsed < 10.0);
}

TEST_CASE("a covering entry exists exactly when some earlier creation includes the group") {
    std::mt19937_64 rng(99);
    long mismatches = 0;
    for (int run = 0; run < 1000; ++run) {
        HorizonSet h;
        std::vector<Group> history;
        CommId cid = 1;
        for (int i = 0; i < 12; ++i) {
            Group g = t::random_group(rng, 8);
            history.push_back(g);
            h.insert(live(cid++, g));
            for (int probe = 0; probe < 5; ++probe) {
                Group q = t::random_group(rng, 8);
                if (h.covering(q).has_value() != t::oracle_prior_superset(history, q))
                    ++mismatches;
            }
        }
    }
    CHECK(mismatches == 0);
    gate("covering equivalence: presence matches the prior-superset scan on 1000 histories",
         mismatches == 0);
}

TEST_CASE("the three insertion shapes behave as specified") {
    bool ok = true;

    HorizonSet included;  // new group already inside an entry
    included.insert(live(1, {0, 1, 2}));
    included.insert(live(2, {0, 1}));
    ok &= entry_set(included) == std::set<Group>{Group{0, 1, 2}};

    HorizonSet swallows;  // new group includes the existing entry
    swallows.insert(live(1, {0, 1}));
    swallows.insert(live(2, {0, 1, 2, 3}));
    ok &= entry_set(swallows) == std::set<Group>{Group{0, 1, 2, 3}};

    HorizonSet overlap;  // incomparable groups sit side by side
    overlap.insert(live(1, {0, 1}));
    overlap.insert(live(2, {1, 2}));
    ok &= entry_set(overlap) == std::set<Group>{Group{0, 1}, Group{1, 2}};

    gate("insertion cases: included, swallowing and overlapping groups end up as expected", ok);
}

TEST_CASE("an early crash deadlocks the plain path and only delays the covered one") {
    const std::string vulnerable =
        "procs 3\npset app://all 0-2\ncrash 2 @ 0\n"
        "prog * : sinit; gset app://all; create; fin\n";
    auto dead = run_scenario(parse_scenario(vulnerable), FtMode::None, 0, 100000);
    bool ok = dead.verdict == Verdict::Deadlock && dead.deadlocked == std::set<ProcessId>{0, 1};
    CHECK(dead.verdict == Verdict::Deadlock);
    CHECK(dead.deadlocked == std::set<ProcessId>{0, 1});

    // the CLI agrees, down to the exit code
    if (const char* bin = std::getenv("HORIZONSIM_BIN")) {
        std::string dir = std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp";
        std::string path = dir + "/acceptance_dead.scn";
        {
            std::FILE* f = std::fopen(path.c_str(), "w");
            REQUIRE(f);
            std::fputs(vulnerable.c_str(), f);
            std::fclose(f);
        }
        std::string cmd = std::string(bin) + " run --scenario " + path +
                          " --mode none --format machine > /dev/null 2>&1";
        int raw = std::system(cmd.c_str());
        int code = raw == -1 ? -1 : WEXITSTATUS(raw);
        CHECK(code == 2);
        ok &= code == 2;
        std::remove(path.c_str());
    }

    // protected flavor: same creation, preceded by an intent whose collective
    // completed before the crash hit; the run then finishes with the alive pair
    bool protected_ok = false;
    for (Tick crash = 1; crash <= 40 && !protected_ok; ++crash) {
        std::string text = "procs 3\npset app://all 0-2\ncrash 2 @ " + std::to_string(crash) +
                           "\nprog * : sinit; gset app://all; horizon; create; fin\n";
        Simulator sim(parse_scenario(text), FtMode::Horizon);
        auto report = sim.run(100000);
        if (report.verdict != Verdict::Completed) continue;
        REQUIRE(sim.trace().crashes.count(2));
        Tick crashed_at = sim.trace().crashes.at(2);
        // the intent communicator existed (and covered the creators)
        // strictly before the victim died
        bool intent_first = !report.creations.empty() &&
                            report.creations.front().requested == Group{0, 1, 2};
        bool intent_closed_before_crash = false;
        for (const auto& rec : sim.trace().calls)
            if (rec.kind == CallKind::HorizonIntent && rec.end < crashed_at)
                intent_closed_before_crash = true;
        if (!intent_first || !intent_closed_before_crash) continue;
        const auto& create = report.creations.back();
        protected_ok = create.requested == Group{0, 1, 2} && create.covered &&
                       create.membership == Group{0, 1};
    }
    CHECK(protected_ok);
    ok &= protected_ok;

    gate("deadlock demonstration: unprotected run blocks 0 and 1 (exit 2); covered run "
         "completes with the alive pair",
         ok);
}

TEST_CASE("single crashes after coverage never deadlock the protected mode") {
    auto start = std::chrono::steady_clock::now();
    const std::string base_text =
        "procs 4\npset app://g 0-3\n"
        "prog * : sinit; gset app://g; horizon; create; fin\n";
    auto plan = parse_scenario(base_text);

    // coverage is established once every process finished its intent
    Simulator probe(plan, FtMode::Horizon);
    auto probe_report = probe.run(100000);
    REQUIRE(probe_report.verdict == Verdict::Completed);
    Tick cov = 0;
    for (const auto& rec : probe.trace().calls)
        if (rec.kind == CallKind::HorizonIntent) cov = std::max(cov, rec.end);
    Tick horizon_end = probe_report.ticks;

    long protected_deadlocks = 0;
    long protected_runs = 0;
    for (ProcessId victim = 0; victim < 4; ++victim) {
        for (Tick tick = cov + 1; tick <= horizon_end + 2; ++tick) {
            ScenarioPlan crashed = plan;
            crashed.faults.push_back({victim, tick});
            auto report = run_scenario(crashed, FtMode::Horizon, 0, 100000);
            ++protected_runs;
            if (report.verdict == Verdict::Deadlock) ++protected_deadlocks;
        }
    }
    CHECK(protected_deadlocks == 0);

    // the unprotected mode deadlocks whenever a member dies before calling
    long vulnerable_mismatches = 0;
    long vulnerable_runs = 0;
    Simulator none_probe(plan, FtMode::None);
    auto none_report = none_probe.run(100000);
    REQUIRE(none_report.verdict == Verdict::Completed);
    for (ProcessId victim = 0; victim < 4; ++victim) {
        for (Tick tick = 0; tick <= none_report.ticks + 2; ++tick) {
            ScenarioPlan crashed = plan;
            crashed.faults.push_back({victim, tick});
            Simulator sim(crashed, FtMode::None);
            auto report = sim.run(100000);
            bool victim_called = false;
            for (const auto& s : sim.trace().starts)
                if (s.pid == victim && s.kind == CallKind::CommCreate) victim_called = true;
            if (!victim_called) {
                ++vulnerable_runs;
                if (report.verdict != Verdict::Deadlock) ++vulnerable_mismatches;
            }
        }
    }
    CHECK(vulnerable_mismatches == 0);
    CHECK(vulnerable_runs > 0);

    double elapsed = seconds_since(start);
    CHECK(elapsed < 60.0);
    gate("crash placement sweep: " + std::to_string(protected_runs) +
             " covered runs never deadlock; every pre-call crash (" +
             std::to_string(vulnerable_runs) + " runs) deadlocks the plain path, in " +
             std::to_string(elapsed).substr(0, 4) + "s",
         protected_deadlocks == 0 && vulnerable_mismatches == 0 && vulnerable_runs > 0 &&
             elapsed < 60.0);
}

TEST_CASE("message overhead orders and scales as claimed") {
    const std::vector<ProcessId> sizes{8, 16, 32, 64};
    std::map<std::string, std::map<ProcessId, std::uint64_t>> totals;

    bool ok = true;
    for (ProcessId n : sizes) {
        auto plan = gen_ep_like(n, 4);
        for (FtMode mode : {FtMode::None, FtMode::Naive, FtMode::Horizon}) {
            auto report = run_scenario(plan, mode, 0, 1000000);
            REQUIRE(report.verdict == Verdict::Completed);
            // assertions run against the machine-format fields
            auto doc = json::parse(emit_report(report, ReportFormat::Machine));
            totals[doc.at("mode")][doc.at("n").get<ProcessId>()] =
                doc.at("messages").at("total").get<std::uint64_t>();
            // the naive world setup costs one join and one commit per peer
            std::uint64_t setup = doc.at("messages").at("naive_world_setup");
            ok &= setup == (mode == FtMode::Naive ? 2ull * (n - 1) : 0ull);
        }
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        ProcessId a = sizes[i - 1], b = sizes[i];
        // naive grows strictly, in total and per process
        ok &= totals["naive"][a] < totals["naive"][b];
        ok &= totals["naive"][b] * a > totals["naive"][a] * b;
        // plain and horizon runs keep per-process work independent of n
        ok &= totals["none"][a] * b == totals["none"][b] * a;
        ok &= totals["horizon"][a] * b == totals["horizon"][b] * a;
        // so the horizon overhead over the plain mode is constant per process
        ok &= (totals["horizon"][a] - totals["none"][a]) * b ==
              (totals["horizon"][b] - totals["none"][b]) * a;
    }
    for (ProcessId n : sizes) {
        ok &= totals["naive"][n] > totals["horizon"][n];
        ok &= totals["horizon"][n] >= totals["none"][n];
    }
    CHECK(ok);
    gate("overhead trend: naive grows with size and stays above horizon; horizon minus "
         "plain is constant per process",
         ok);
}

TEST_CASE("identical runs produce byte-identical machine reports") {
    std::vector<std::pair<std::string, FtMode>> cases = {
        {"procs 3\npset app://all 0-2\ncrash 2 @ 0\nprog * : sinit; gset app://all; create; fin\n",
         FtMode::None},
        {serialize_scenario(gen_ep_like(16, 4)), FtMode::Horizon},
        {serialize_scenario(gen_dt_like(6)), FtMode::Naive},
        {"procs 4\ncrash 2 @ 25\nprog * : winit; shrink; agree 1; fin\n", FtMode::None},
    };
    bool ok = true;
    for (const auto& [text, mode] : cases) {
        auto plan = parse_scenario(text);
        auto a = emit_report(run_scenario(plan, mode, 5, 100000), ReportFormat::Machine);
        auto b = emit_report(run_scenario(plan, mode, 5, 100000), ReportFormat::Machine);
        ok &= a == b;
        CHECK(a == b);
    }
    gate("determinism: repeated runs emit byte-identical machine reports", ok);
}

TEST_CASE("agreement and shrink keep their contracts under random crashes") {
    // base: first tick safely after the world communicator exists
    ScenarioPlan world_plan;
    world_plan.n = 5;
    world_plan.programs.assign(5, {{{CallKind::WorldInit}}});
    Simulator wp(world_plan, FtMode::None);
    wp.run(100000);
    Tick base = 0;
    for (const auto& rec : wp.trace().calls) base = std::max(base, rec.end);
    ++base;

    std::mt19937_64 rng(777);
    bool agree_ok = true;
    for (int schedule = 0; schedule < 200; ++schedule) {
        ScenarioPlan plan;
        plan.n = 5;
        plan.programs.assign(5, {});
        std::vector<std::uint64_t> bits(5);
        for (ProcessId p = 0; p < 5; ++p) {
            bits[p] = rng() % 2;
            plan.programs[p] = {{CallKind::WorldInit}, {CallKind::Agree, "", bits[p]}};
        }
        std::set<ProcessId> victims;
        int count = 1 + static_cast<int>(rng() % 2);
        for (int v = 0; v < count; ++v) victims.insert(static_cast<ProcessId>(rng() % 5));
        for (ProcessId v : victims) plan.faults.push_back({v, base + rng() % 25});

        Simulator sim(plan, FtMode::None);
        sim.run(100000);
        std::set<std::uint64_t> seen;
        int finished = 0;
        for (const auto& rec : sim.trace().calls)
            if (rec.kind == CallKind::Agree && rec.ok) {
                seen.insert(rec.bits & 1);
                ++finished;
            }
        agree_ok &= seen.size() <= 1;
        agree_ok &= finished >= static_cast<int>(5 - victims.size());
    }
    CHECK(agree_ok);

    bool shrink_ok = true;
    for (int schedule = 0; schedule < 200; ++schedule) {
        ScenarioPlan plan;
        plan.n = 5;
        plan.programs.assign(5, {{{CallKind::WorldInit}, {CallKind::Shrink}}});
        std::set<ProcessId> victims;
        int count = 1 + static_cast<int>(rng() % 2);
        for (int v = 0; v < count; ++v) {
            ProcessId pid = static_cast<ProcessId>(rng() % 5);
            if (!victims.insert(pid).second) continue;
            plan.faults.push_back({pid, base + rng() % 25});
        }
        Simulator sim(plan, FtMode::None);
        sim.run(100000);

        std::vector<CallRecord> recs;
        for (const auto& rec : sim.trace().calls)
            if (rec.kind == CallKind::Shrink && rec.ok) recs.push_back(rec);
        shrink_ok &= recs.size() >= 5 - victims.size();
        if (recs.empty()) continue;
        Tick close = recs[0].end;
        for (const auto& rec : recs) close = std::min(close, rec.end);
        for (const auto& rec : recs) {
            shrink_ok &= rec.membership == recs[0].membership;
            shrink_ok &= rec.cid == recs[0].cid;
        }
        // membership excludes exactly the processes whose crash took effect
        // before the agreement closed; later crashes may be missed
        const auto& crashes = sim.trace().crashes;
        for (ProcessId p = 0; p < 5; ++p) {
            auto it = crashes.find(p);
            if (it == crashes.end())
                shrink_ok &= recs[0].membership.contains(p);  // survivors always stay
            else if (it->second < close)
                shrink_ok &= !recs[0].membership.contains(p);  // pre-agreement crashes go
        }
    }
    CHECK(shrink_ok);

    gate("fault-tolerant primitives: agree bitmaps identical and shrink memberships exclude "
         "pre-agreement crashes across 200 random schedules each",
         agree_ok && shrink_ok);
}
