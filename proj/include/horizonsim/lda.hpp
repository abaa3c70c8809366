#pragma once

#include <cstdint>
#include <functional>

#include "horizonsim/core.hpp"

namespace horizonsim {

using Tick = std::uint64_t;

// Outcome of one liveness discovery agreement: the alive subset of a target
// group, identical at every alive member, closed at `epoch`.
struct LivenessVerdict {
    Group target;
    Group alive;  // subset of target; always contains the caller
    Tick epoch = 0;
    bool operator==(const LivenessVerdict&) const = default;
};

// A participant's current view of the discovery round: the target minus every
// member it knows to have crashed. The view doubles as the round identifier,
// so participants whose knowledge differs transiently converge to the same
// round once crash notifications have reached everyone.
Group lda_round_view(const Group& target, const std::function<bool(ProcessId)>& known_crashed);

}  // namespace horizonsim
