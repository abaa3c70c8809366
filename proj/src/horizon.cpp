#include "horizonsim/horizon.hpp"

#include <algorithm>

namespace horizonsim {

void HorizonSet::insert(const Communicator& c) {
    for (const auto& e : entries_) {
        if (e.group.includes(c.group)) return;  // covered already (equality included)
    }
    std::erase_if(entries_, [&](const Communicator& e) { return c.group.includes(e.group); });
    auto pos = std::lower_bound(entries_.begin(), entries_.end(), c.cid,
                                [](const Communicator& e, CommId cid) { return e.cid < cid; });
    entries_.insert(pos, c);
}

std::optional<Communicator> HorizonSet::covering(const Group& g) const {
    const Communicator* best = nullptr;
    for (const auto& e : entries_) {
        if (!is_superset_member(e, g)) continue;
        if (!best || e.group.size() < best->group.size() ||
            (e.group.size() == best->group.size() && e.cid < best->cid)) {
            best = &e;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

void HorizonSet::evict(CommId cid) {
    std::erase_if(entries_, [&](const Communicator& e) { return e.cid == cid; });
}

std::vector<Group> HorizonSet::entry_groups() const {
    std::vector<Group> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.group);
    return out;
}

}  // namespace horizonsim
