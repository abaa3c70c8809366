#pragma once

#include <optional>
#include <vector>

#include "horizonsim/core.hpp"

namespace horizonsim {

// Minimal set of communicators covering every group seen in a completed
// creation call: an antichain under group inclusion, holding exactly the
// maximal groups of the observed history. One instance per simulated process.
class HorizonSet {
public:
    // Inserting a live communicator keeps the set minimal:
    //  - its group already included by an entry -> no change
    //  - its group includes one or more entries -> they are replaced by it
    //  - otherwise (overlap or disjoint)        -> it joins the set
    // A duplicate group is treated as the included case, keeping the older
    // entry so ids stay stable.
    void insert(const Communicator& c);

    // Some entry whose group includes g, if any. Among several candidates the
    // smallest group wins, ties broken by the smallest id; smaller covering
    // communicators keep liveness discovery cheap.
    std::optional<Communicator> covering(const Group& g) const;

    // Remove the entry with this id, if present. Coverage of previously seen
    // groups may no longer hold afterwards.
    void evict(CommId cid);

    const std::vector<Communicator>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    // Entry groups ordered by id, for reports and oracle comparison.
    std::vector<Group> entry_groups() const;

private:
    std::vector<Communicator> entries_;  // kept ordered by cid
};

}  // namespace horizonsim
