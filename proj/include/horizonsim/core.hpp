#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace horizonsim {

using ProcessId = std::uint32_t;
using CommId = std::uint64_t;

// Immutable ordered set of process ids. Members are kept sorted and unique,
// so equality and inclusion are structural.
class Group {
public:
    Group() = default;
    Group(std::initializer_list<ProcessId> ids);
    explicit Group(std::vector<ProcessId> ids);

    static Group range(ProcessId count);  // {0, 1, ..., count-1}

    bool contains(ProcessId p) const;
    bool includes(const Group& other) const;    // every member of other is in *this
    bool intersects(const Group& other) const;  // nonempty intersection
    Group minus(const Group& other) const;
    Group intersect(const Group& other) const;

    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    ProcessId min() const;

    const std::vector<ProcessId>& members() const { return members_; }
    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    bool operator==(const Group&) const = default;
    auto operator<=>(const Group&) const = default;

    std::string str() const;

private:
    std::vector<ProcessId> members_;
};

inline bool group_includes(const Group& a, const Group& b) { return a.includes(b); }
inline bool group_intersects(const Group& a, const Group& b) { return a.intersects(b); }

enum class CommStatus { Live, Revoked, Freed };

// A communicator binds a fixed group under a globally unique id. The group is
// immutable; status only moves Live->Revoked, Live->Freed, Revoked->Freed.
struct Communicator {
    CommId cid = 0;
    Group group;
    CommStatus status = CommStatus::Live;

    void revoke();
    void free();
};

// Membership test against the set of communicators covering a group: true iff
// c's group contains every process of g.
inline bool is_superset_member(const Communicator& c, const Group& g) {
    return c.group.includes(g);
}

struct UnknownPset : std::runtime_error {
    explicit UnknownPset(const std::string& name)
        : std::runtime_error("unknown process set: " + name) {}
};

// Named process sets, URI-style. "mpi://WORLD" and "mpi://SELF" are builtin.
class PsetRegistry {
public:
    explicit PsetRegistry(ProcessId world_size = 0);

    void bind(const std::string& name, Group g);
    bool has(const std::string& name) const;
    Group resolve(const std::string& name, ProcessId caller) const;
    const std::map<std::string, Group>& bindings() const { return psets_; }
    ProcessId world_size() const { return n_; }

    static constexpr const char* kWorld = "mpi://WORLD";
    static constexpr const char* kSelf = "mpi://SELF";

private:
    ProcessId n_;
    std::map<std::string, Group> psets_;
};

inline Group pset_resolve(const PsetRegistry& reg, const std::string& name, ProcessId caller) {
    return reg.resolve(name, caller);
}

}  // namespace horizonsim
