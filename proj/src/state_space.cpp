#include "mtdg/state_space.hpp"

#include <set>

#include "mtdg/errors.hpp"

namespace mtdg {

namespace {

const SignedEvent kEventTable[4] = {
    {-1, PriceFlag::Change},
    {-1, PriceFlag::NoChange},
    {+1, PriceFlag::NoChange},
    {+1, PriceFlag::Change},
};

}  // namespace

StateSpace StateSpace::plain(int m) {
    StateSpace s;
    s.m = m;
    s.labels.reserve(static_cast<std::size_t>(m > 0 ? m : 0));
    for (int i = 1; i <= m; ++i) s.labels.push_back("s" + std::to_string(i));
    s.check();
    return s;
}

StateSpace StateSpace::signed_events() {
    StateSpace s;
    s.m = 4;
    s.labels = {"sell/C", "sell/NC", "buy/NC", "buy/C"};
    s.has_event_map = true;
    return s;
}

SignedEvent StateSpace::event(int state) const {
    if (!has_event_map) throw DomainError("state space has no signed-event mapping");
    if (state < 1 || state > 4) throw DomainError("state out of range: " + std::to_string(state));
    return kEventTable[state - 1];
}

int StateSpace::state_of(int sign, PriceFlag flag) const {
    if (!has_event_map) throw DomainError("state space has no signed-event mapping");
    if (sign != 1 && sign != -1) throw DomainError("trade sign must be +1 or -1");
    for (int s = 0; s < 4; ++s) {
        if (kEventTable[s].sign == sign && kEventTable[s].flag == flag) return s + 1;
    }
    throw DomainError("unreachable signed-event combination");
}

void StateSpace::check() const {
    if (m < 2) throw DomainError("state space needs m >= 2, got " + std::to_string(m));
    if (labels.size() != static_cast<std::size_t>(m))
        throw DomainError("label count does not match m");
    std::set<std::string> uniq(labels.begin(), labels.end());
    if (uniq.size() != labels.size()) throw DomainError("state labels must be distinct");
    if (has_event_map && m != 4)
        throw DomainError("the signed-event mapping requires m = 4");
}

}  // namespace mtdg
