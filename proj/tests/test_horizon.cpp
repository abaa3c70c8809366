#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "horizonsim/horizon.hpp"
#include "support/oracles.hpp"

using namespace horizonsim;
namespace t = horizonsim::testing;

namespace {

Communicator live(CommId cid, Group g) { return Communicator{cid, std::move(g), CommStatus::Live}; }

std::set<Group> entry_group_set(const HorizonSet& h) {
    auto v = h.entry_groups();
    return {v.begin(), v.end()};
}

// The stated selection rule, evaluated by exhaustive scan.
std::optional<Communicator> covering_by_scan(const HorizonSet& h, const Group& g) {
    std::optional<Communicator> best;
    for (const auto& e : h.entries()) {
        if (!e.group.includes(g)) continue;
        if (!best || e.group.size() < best->group.size() ||
            (e.group.size() == best->group.size() && e.cid < best->cid))
            best = e;
    }
    return best;
}

}  // namespace

TEST_CASE("insert keeps an existing superset entry") {
    HorizonSet h;
    h.insert(live(1, {0, 1, 2}));
    h.insert(live(2, {0, 1}));
    CHECK(entry_group_set(h) == std::set<Group>{Group{0, 1, 2}});
}

TEST_CASE("insert replaces entries the new group includes") {
    HorizonSet h;
    h.insert(live(1, {0, 1}));
    h.insert(live(2, {0, 1, 2, 3}));
    CHECK(entry_group_set(h) == std::set<Group>{Group{0, 1, 2, 3}});
}

TEST_CASE("insert keeps overlapping incomparable entries side by side") {
    HorizonSet h;
    h.insert(live(1, {0, 1}));
    h.insert(live(2, {1, 2}));
    CHECK(entry_group_set(h) == std::set<Group>{Group{0, 1}, Group{1, 2}});
}

TEST_CASE("duplicate group keeps the older entry") {
    HorizonSet h;
    h.insert(live(4, {0, 1}));
    h.insert(live(9, {0, 1}));
    REQUIRE(h.size() == 1);
    CHECK(h.entries()[0].cid == 4);
}

TEST_CASE("covering picks the smallest group, then the smallest id") {
    HorizonSet h;
    h.insert(live(5, {0, 1, 2}));
    h.insert(live(9, {1, 2, 3}));
    auto c = h.covering(Group{1, 2});
    REQUIRE(c.has_value());
    CHECK(c->cid == 5);
    auto scan = covering_by_scan(h, Group{1, 2});
    REQUIRE(scan.has_value());
    CHECK(scan->cid == c->cid);

    CHECK(h.covering(Group{0, 1, 2}).value().cid == 5);
    CHECK_FALSE(h.covering(Group{0, 3}).has_value());

    HorizonSet single;
    single.insert(live(1, {0, 1, 2, 3}));
    CHECK(single.covering(Group{1, 3}).value().cid == 1);
    HorizonSet narrow;
    narrow.insert(live(1, {0, 1}));
    CHECK_FALSE(narrow.covering(Group{0, 2}).has_value());
}

TEST_CASE("covering agrees with the exhaustive rule on random sets") {
    std::mt19937_64 rng(23);
    for (int run = 0; run < 300; ++run) {
        HorizonSet h;
        CommId cid = 1;
        for (int i = 0; i < 6; ++i) h.insert(live(cid++, t::random_group(rng, 6)));
        for (int probe = 0; probe < 10; ++probe) {
            Group g = t::random_group(rng, 6);
            auto got = h.covering(g);
            auto want = covering_by_scan(h, g);
            CHECK(got.has_value() == want.has_value());
            if (got && want) CHECK(got->cid == want->cid);
        }
    }
}

TEST_CASE("evict removes by id and ignores unknown ids") {
    HorizonSet h;
    h.insert(live(1, {0, 1}));
    h.insert(live(2, {2, 3}));
    h.evict(7);
    CHECK(h.size() == 2);
    h.evict(2);
    CHECK(entry_group_set(h) == std::set<Group>{Group{0, 1}});
    h.evict(1);
    CHECK(h.empty());
}

TEST_CASE("oracle sanity") {
    CHECK(t::oracle_minimal({Group{0, 1}, Group{0, 1, 2}}) == std::set<Group>{Group{0, 1, 2}});
    CHECK(t::oracle_minimal({Group{0}, Group{1}}) == std::set<Group>{Group{0}, Group{1}});
    CHECK(t::oracle_minimal({}) == std::set<Group>{});
}

TEST_CASE("entry groups equal the maximal elements of the insert history") {
    std::mt19937_64 rng(31);
    for (int run = 0; run < 500; ++run) {
        HorizonSet h;
        std::vector<Group> history;
        CommId cid = 1;
        int len = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < len; ++i) {
            Group g = t::random_group(rng, 7);
            history.push_back(g);
            h.insert(live(cid++, g));
            CHECK(t::is_antichain(h.entry_groups()));
            CHECK(entry_group_set(h) == t::oracle_minimal(history));
        }
    }
}

TEST_CASE("insert order does not matter") {
    std::mt19937_64 rng(37);
    for (int run = 0; run < 200; ++run) {
        std::vector<Group> groups;
        for (int i = 0; i < 5; ++i) groups.push_back(t::random_group(rng, 6));
        HorizonSet forward, backward;
        CommId cid = 1;
        for (const auto& g : groups) forward.insert(live(cid++, g));
        for (auto it = groups.rbegin(); it != groups.rend(); ++it) backward.insert(live(cid++, *it));
        CHECK(entry_group_set(forward) == entry_group_set(backward));
    }
}

TEST_CASE("covering presence is monotone under inserts") {
    std::mt19937_64 rng(41);
    for (int run = 0; run < 200; ++run) {
        HorizonSet h;
        CommId cid = 1;
        for (int i = 0; i < 4; ++i) h.insert(live(cid++, t::random_group(rng, 6)));
        Group probe = t::random_group(rng, 6);
        bool before = h.covering(probe).has_value();
        h.insert(live(cid++, t::random_group(rng, 6)));
        if (before) CHECK(h.covering(probe).has_value());
    }
}

TEST_CASE("antichain holds after evictions too") {
    std::mt19937_64 rng(43);
    for (int run = 0; run < 100; ++run) {
        HorizonSet h;
        CommId cid = 1;
        for (int i = 0; i < 8; ++i) {
            h.insert(live(cid++, t::random_group(rng, 6)));
            if (rng() % 3 == 0 && !h.empty()) h.evict(h.entries()[rng() % h.size()].cid);
            CHECK(t::is_antichain(h.entry_groups()));
        }
    }
}
