#include "horizonsim/core.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <sstream>

namespace horizonsim {

namespace {
std::vector<ProcessId> normalize(std::vector<ProcessId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}
}  // namespace

Group::Group(std::initializer_list<ProcessId> ids) : members_(normalize({ids})) {}

Group::Group(std::vector<ProcessId> ids) : members_(normalize(std::move(ids))) {}

Group Group::range(ProcessId count) {
    std::vector<ProcessId> ids(count);
    std::iota(ids.begin(), ids.end(), 0);
    Group g;
    g.members_ = std::move(ids);
    return g;
}

bool Group::contains(ProcessId p) const {
    return std::binary_search(members_.begin(), members_.end(), p);
}

bool Group::includes(const Group& other) const {
    return std::includes(members_.begin(), members_.end(), other.members_.begin(),
                         other.members_.end());
}

bool Group::intersects(const Group& other) const {
    auto a = members_.begin();
    auto b = other.members_.begin();
    while (a != members_.end() && b != other.members_.end()) {
        if (*a == *b) return true;
        if (*a < *b)
            ++a;
        else
            ++b;
    }
    return false;
}

Group Group::minus(const Group& other) const {
    std::vector<ProcessId> out;
    std::set_difference(members_.begin(), members_.end(), other.members_.begin(),
                        other.members_.end(), std::back_inserter(out));
    Group g;
    g.members_ = std::move(out);
    return g;
}

Group Group::intersect(const Group& other) const {
    std::vector<ProcessId> out;
    std::set_intersection(members_.begin(), members_.end(), other.members_.begin(),
                          other.members_.end(), std::back_inserter(out));
    Group g;
    g.members_ = std::move(out);
    return g;
}

ProcessId Group::min() const {
    assert(!members_.empty());
    return members_.front();
}

std::string Group::str() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (i) os << ',';
        os << members_[i];
    }
    os << '}';
    return os.str();
}

void Communicator::revoke() {
    if (status == CommStatus::Live) status = CommStatus::Revoked;
}

void Communicator::free() {
    if (status != CommStatus::Freed) status = CommStatus::Freed;
}

PsetRegistry::PsetRegistry(ProcessId world_size) : n_(world_size) {}

void PsetRegistry::bind(const std::string& name, Group g) { psets_[name] = std::move(g); }

bool PsetRegistry::has(const std::string& name) const {
    return name == kWorld || name == kSelf || psets_.count(name) > 0;
}

Group PsetRegistry::resolve(const std::string& name, ProcessId caller) const {
    if (name == kWorld) return Group::range(n_);
    if (name == kSelf) return Group{caller};
    auto it = psets_.find(name);
    if (it == psets_.end()) throw UnknownPset(name);
    return it->second;
}

}  // namespace horizonsim
