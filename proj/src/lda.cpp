#include "horizonsim/lda.hpp"

namespace horizonsim {

Group lda_round_view(const Group& target, const std::function<bool(ProcessId)>& known_crashed) {
    std::vector<ProcessId> alive;
    for (ProcessId p : target)
        if (!known_crashed(p)) alive.push_back(p);
    return Group(std::move(alive));
}

}  // namespace horizonsim
